// kws/synth.hpp

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
#include <string>
#include <vector>

#include "kws/error.hpp"
#include "kws/matrix.hpp"
#include "kws/rng.hpp"
#include "kws/sampling.hpp"

namespace kws {

// Generator for labeled utterances with one keyword instance each. The
// generator is itself an HMM: per-state geometric dwell times and Gaussian
// emissions around well-separated state means, which makes the transition
// estimator's consistency directly testable. Emissions are produced in the
// pre-stacking feature space; audio synthesis is deliberately bypassed.
//
// The default noise_sigma and kw_dwell_mean put the pretrained baseline in
// the regime where windowed detection has genuine errors while per-frame
// classification stays fair, which is where frame-level and window-level
// training visibly diverge.
struct SynthConfig {
  int num_states = 20;
  int keyword_chain_len = 18;
  int feature_dim = 13;
  double mean_scale = 1.0;             // scale of the state mean cloud
  double state_mean_separation = 1.0;  // minimum pairwise mean distance
  double noise_sigma = 5.0;            // isotropic emission noise (see below)
  double kw_dwell_mean = 2.0;          // geometric mean frames per keyword state
  double sil_dwell_mean = 15.0;
  double p_silence = 0.7;              // silence segment beside the keyword
  int min_frames = 300;                // utterance length bounds (soft when the
  int max_frames = 450;                //   keyword itself runs longer)
  uint64_t seed = 0;

  int background_state() const { return 0; }
  int silence_state() const { return 1; }
  int first_kw() const { return 2; }
  int last_kw() const { return 1 + keyword_chain_len; }

  void validate() const {
    KWS_CHECK(noise_sigma > 0.0, "noise_sigma must be positive");
    KWS_CHECK(keyword_chain_len >= 1 && keyword_chain_len <= num_states - 2,
              "keyword_chain_len must fit beside silence and background");
    KWS_CHECK(feature_dim >= 1, "feature_dim must be positive");
    KWS_CHECK(1 <= min_frames && min_frames <= max_frames, "bad utterance length bounds");
  }
};

struct SynthUtterance {
  Matrix features;            // T x feature_dim, pre-stacking
  std::vector<int> state_labels;  // length T
  Window keyword_window;
};

// State emission means, deterministic per seed, pairwise distance enforced
// by redraw.
inline Matrix synth_state_means(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, 0x6d65616e));
  Matrix means(cfg.num_states, cfg.feature_dim);
  for (int s = 0; s < cfg.num_states; ++s) {
    for (int attempt = 0;; ++attempt) {
      KWS_CHECK(attempt < 10000,
                "cannot place state means at the requested separation");
      for (int d = 0; d < cfg.feature_dim; ++d)
        means(s, d) = cfg.mean_scale * rng.gaussian();
      bool ok = true;
      for (int p = 0; p < s && ok; ++p) {
        double dist2 = 0.0;
        for (int d = 0; d < cfg.feature_dim; ++d) {
          double diff = means(s, d) - means(p, d);
          dist2 += diff * diff;
        }
        ok = dist2 >= cfg.state_mean_separation * cfg.state_mean_separation;
      }
      if (ok) break;
    }
  }
  return means;
}

inline SynthUtterance generate_utterance(const SynthConfig& cfg, const Matrix& means,
                                         Rng& rng) {
  cfg.validate();
  KWS_CHECK(means.rows() == cfg.num_states && means.cols() == cfg.feature_dim,
            "state mean matrix does not match config");

  // state run lengths: background, [silence], keyword chain, [silence], background
  std::vector<int> labels;
  const int target_len = static_cast<int>(rng.uniform_int(cfg.min_frames, cfg.max_frames));

  std::vector<int> middle;
  if (rng.uniform() < cfg.p_silence) {
    int n = rng.geometric_frames(cfg.sil_dwell_mean);
    middle.insert(middle.end(), n, cfg.silence_state());
  }
  int kw_start_in_middle = static_cast<int>(middle.size());
  for (int s = cfg.first_kw(); s <= cfg.last_kw(); ++s) {
    int n = rng.geometric_frames(cfg.kw_dwell_mean);
    middle.insert(middle.end(), n, s);
  }
  int kw_end_in_middle = static_cast<int>(middle.size());
  if (rng.uniform() < cfg.p_silence) {
    int n = rng.geometric_frames(cfg.sil_dwell_mean);
    middle.insert(middle.end(), n, cfg.silence_state());
  }

  const int mid_len = static_cast<int>(middle.size());
  int total = std::max(target_len, mid_len + 20);
  int lead = static_cast<int>(rng.uniform_int(10, total - mid_len - 10));
  int tail = total - mid_len - lead;

  labels.insert(labels.end(), lead, cfg.background_state());
  labels.insert(labels.end(), middle.begin(), middle.end());
  labels.insert(labels.end(), tail, cfg.background_state());

  SynthUtterance utt;
  utt.state_labels = labels;
  utt.keyword_window = Window{lead + kw_start_in_middle, lead + kw_end_in_middle};
  utt.features = Matrix(static_cast<int>(labels.size()), cfg.feature_dim);
  for (size_t t = 0; t < labels.size(); ++t) {
    const double* mu = means.row(labels[t]);
    double* row = utt.features.row(static_cast<int>(t));
    for (int d = 0; d < cfg.feature_dim; ++d)
      row[d] = mu[d] + cfg.noise_sigma * rng.gaussian();
  }
  return utt;
}

}  // namespace kws
