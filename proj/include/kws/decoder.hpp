// kws/decoder.hpp

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
#include <optional>
#include <vector>

#include "kws/error.hpp"
#include "kws/hmm.hpp"
#include "kws/matrix.hpp"

namespace kws {

struct Detection {
  double score = 0.0;   // best-path log-likelihood / window frame count
  int start_frame = 0;  // inclusive
  int end_frame = 0;    // inclusive
};

// Always-on log-domain Viterbi over the keyword chain. Paths start at the
// first keyword state: at frame 0 via the state prior, afterwards via the
// background->first-keyword entry arc, which opens a fresh path at every
// frame. One frame of observation scores goes in per push; whenever the end
// of the chain is reachable a Detection comes out, its start frame recovered
// by token passing. Ties in the max prefer the self-loop.
class ViterbiStream {
 public:
  explicit ViterbiStream(const HmmParams& hmm, bool keep_backpointers = false)
      : hmm_(hmm), keep_bp_(keep_backpointers) {
    hmm_.validate();
    const int K = hmm_.chain_len();
    v_.assign(K, kNegInf);
    start_.assign(K, 0);
  }

  int frames_seen() const { return t_; }

  // scores: one row of scaled log-likelihoods, width num_states, finite.
  std::optional<Detection> push(const double* scores) {
    const int K = hmm_.chain_len();
    const int fk = hmm_.first_kw;
    for (int i = 0; i < hmm_.num_states; ++i)
      KWS_CHECK(std::isfinite(scores[i]), "non-finite observation score");

    std::vector<uint8_t> choice(keep_bp_ ? K : 0, 0);
    if (t_ == 0) {
      v_[0] = hmm_.log_priors[fk] + scores[fk];
      start_[0] = 0;
      for (int k = 1; k < K; ++k) v_[k] = kNegInf;
    } else {
      // sweep right-to-left so v_[k-1] is still the previous frame's value
      for (int k = K - 1; k >= 0; --k) {
        double cand_self = v_[k] + hmm_.log_self[fk + k];
        double cand_enter;
        int enter_start;
        if (k > 0) {
          cand_enter = v_[k - 1] + hmm_.log_forward[fk + k - 1];
          enter_start = start_[k - 1];
        } else {
          cand_enter = hmm_.log_entry;  // fresh path beginning at this frame
          enter_start = t_;
        }
        if (cand_enter > cand_self) {
          v_[k] = cand_enter + scores[fk + k];
          start_[k] = enter_start;
          if (keep_bp_) choice[k] = 1;
        } else {
          v_[k] = cand_self + scores[fk + k];
          // start_[k] unchanged
        }
      }
    }
    if (keep_bp_) bp_.push_back(std::move(choice));

    std::optional<Detection> det;
    if (std::isfinite(v_[K - 1])) {
      Detection d;
      d.end_frame = t_;
      d.start_frame = start_[K - 1];
      d.score = v_[K - 1] / (t_ - start_[K - 1] + 1);
      det = d;
    }
    ++t_;
    return det;
  }

  // Best-path state sequence ending at the chain end at end_frame, as full
  // state indices. Requires keep_backpointers.
  std::vector<int> backtrack_path(int end_frame) const {
    KWS_CHECK(keep_bp_, "decoder was built without backpointers");
    KWS_CHECK(0 <= end_frame && end_frame < t_, "end_frame out of range");
    const int fk = hmm_.first_kw;
    std::vector<int> rev;
    int k = hmm_.chain_len() - 1;
    int t = end_frame;
    while (true) {
      rev.push_back(fk + k);
      if (t == 0) break;
      uint8_t c = bp_[t][k];
      if (c == 1) {
        if (k == 0) break;  // entry arc: path starts here
        --k;
      }
      --t;
    }
    return std::vector<int>(rev.rbegin(), rev.rend());
  }

 private:
  HmmParams hmm_;
  bool keep_bp_;
  int t_ = 0;
  std::vector<double> v_;
  std::vector<int> start_;
  std::vector<std::vector<uint8_t>> bp_;
};

// Batch decode: every frame's detection candidate, in frame order.
inline std::vector<Detection> viterbi_stream(const Matrix& scores, const HmmParams& hmm) {
  KWS_CHECK(scores.rows() >= 1, "empty score matrix");
  KWS_CHECK(scores.cols() == hmm.num_states, "score width does not match state count");
  ViterbiStream dec(hmm);
  std::vector<Detection> out;
  for (int t = 0; t < scores.rows(); ++t) {
    auto det = dec.push(scores.row(t));
    if (det) out.push_back(*det);
  }
  return out;
}

}  // namespace kws
