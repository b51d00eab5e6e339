// kws/e2e_loss.hpp

// Copyright 2026  kws-e2e authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "kws/error.hpp"
#include "kws/hmm.hpp"
#include "kws/matrix.hpp"

namespace kws {

// Training-time score of one window: the window boundaries are taken to be
// the keyword boundaries, so the best path must run first keyword state ->
// last keyword state across exactly the window's frames.
struct WindowScore {
  double d = 0.0;               // best-path log-likelihood / frame count
  std::vector<int> argmax_path; // length T, full state indices
  int num_frames = 0;
};

enum class WindowInit {
  kForcedStart,  // all initial mass on the first keyword state
  kPriors,       // chain-restricted state priors (the relaxed variant)
};

namespace detail {

struct WindowDp {
  std::vector<double> v;            // K, final frame values
  std::vector<std::vector<uint8_t>> from_fwd;  // T x K backpointers
};

inline WindowDp run_window_dp(const Matrix& scores, const HmmParams& hmm,
                              WindowInit init) {
  const int T = scores.rows();
  const int K = hmm.chain_len();
  const int fk = hmm.first_kw;
  KWS_CHECK(scores.cols() == hmm.num_states, "score width does not match state count");
  if (T < K)
    throw InfeasibleWindowError("window of " + std::to_string(T) +
                                " frames cannot cover a " + std::to_string(K) +
                                "-state chain");
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < hmm.num_states; ++i)
      KWS_CHECK(std::isfinite(scores(t, i)), "non-finite observation score");

  WindowDp dp;
  dp.v.assign(K, kNegInf);
  dp.from_fwd.assign(T, std::vector<uint8_t>(K, 0));
  if (init == WindowInit::kForcedStart) {
    dp.v[0] = scores(0, fk);
  } else {
    for (int k = 0; k < K; ++k) dp.v[k] = hmm.log_priors[fk + k] + scores(0, fk + k);
  }
  for (int t = 1; t < T; ++t) {
    for (int k = K - 1; k >= 0; --k) {
      double cand_self = dp.v[k] + hmm.log_self[fk + k];
      double cand_fwd = (k > 0) ? dp.v[k - 1] + hmm.log_forward[fk + k - 1] : kNegInf;
      if (cand_fwd > cand_self) {  // ties prefer the self-loop
        dp.v[k] = cand_fwd + scores(t, fk + k);
        dp.from_fwd[t][k] = 1;
      } else {
        dp.v[k] = cand_self + scores(t, fk + k);
      }
    }
  }
  return dp;
}

}  // namespace detail

// Eq-3-style max recurrence restricted to the window, with backtracking.
inline WindowScore score_window(const Matrix& scores, const HmmParams& hmm,
                                WindowInit init = WindowInit::kForcedStart) {
  const int T = scores.rows();
  const int K = hmm.chain_len();
  const int fk = hmm.first_kw;
  detail::WindowDp dp = detail::run_window_dp(scores, hmm, init);

  WindowScore ws;
  ws.num_frames = T;
  ws.d = dp.v[K - 1] / T;
  ws.argmax_path.assign(T, 0);
  int k = K - 1;
  for (int t = T - 1; t >= 0; --t) {
    ws.argmax_path[t] = fk + k;
    if (t > 0 && dp.from_fwd[t][k]) --k;
  }
  return ws;
}

// Window score plus its subgradient with respect to the observation scores:
// 1/T at every (frame, state) on the argmax path, 0 elsewhere. Transition and
// prior log-probabilities are treated as constants.
inline std::pair<WindowScore, Matrix> score_window_grad(
    const Matrix& scores, const HmmParams& hmm,
    WindowInit init = WindowInit::kForcedStart) {
  WindowScore ws = score_window(scores, hmm, init);
  Matrix grad(scores.rows(), scores.cols());
  const double g = 1.0 / ws.num_frames;
  for (int t = 0; t < ws.num_frames; ++t) grad(t, ws.argmax_path[t]) = g;
  return {std::move(ws), std::move(grad)};
}

// Hinge objective on the detection score, margin 1. Positive windows are
// pushed above +1, negative windows below -1; samples beyond their margin
// contribute nothing.
struct HingeResult {
  double loss = 0.0;
  double dloss_dd = 0.0;
};

inline HingeResult hinge_loss(double d, bool is_positive) {
  KWS_CHECK(std::isfinite(d), "non-finite detection score");
  HingeResult r;
  if (is_positive) {
    r.loss = std::max(0.0, 1.0 - d);
    r.dloss_dd = d < 1.0 ? -1.0 : 0.0;
  } else {
    r.loss = std::max(0.0, 1.0 + d);
    r.dloss_dd = d > -1.0 ? 1.0 : 0.0;
  }
  return r;
}

}  // namespace kws
