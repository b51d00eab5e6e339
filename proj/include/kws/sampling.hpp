// kws/sampling.hpp

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

#include <algorithm>
#include <numeric>
#include <vector>

#include "kws/error.hpp"
#include "kws/matrix.hpp"
#include "kws/rng.hpp"

namespace kws {

// Half-open frame interval.
struct Window {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  bool valid() const { return 0 <= start && start < end; }
  bool operator==(const Window& o) const { return start == o.start && end == o.end; }
};

// Intersection-over-union of two windows, in [0, 1]. Frame-index intervals;
// the result is invariant to the frames-vs-seconds scale.
inline double iou(const Window& g, const Window& w) {
  KWS_CHECK(g.valid() && w.valid(), "iou: invalid window");
  double inter = std::max(0, std::min(g.end, w.end) - std::max(g.start, w.start));
  double uni = std::max(g.end, w.end) - std::min(g.start, w.start);
  return inter / uni;
}

enum class Polarity { kPositive, kNegative };
enum class SampleSource { kSampled, kSwapAugmented };

struct SampledExample {
  Window window;
  Polarity polarity = Polarity::kNegative;
  SampleSource source = SampleSource::kSampled;
  int swap_split = -1;  // absolute split frame, swap-augmented samples only
};

struct SamplerConfig {
  double iou_p = 0.95;
  double iou_n = 0.5;
  int max_negatives = 20;
  int swap_count = 10;
  int positive_attempts = 100;
  int negative_attempts = 400;
  double swap_jitter_frac = 0.10;
};

// One positive window: ground truth with jittered endpoints, rejection
// sampled until IOU >= iou_p, falling back to the exact ground-truth window.
inline SampledExample sample_positive(int utt_frames, const Window& truth, Rng& rng,
                                      const SamplerConfig& cfg = {}) {
  KWS_CHECK(truth.valid() && truth.end <= utt_frames, "ground-truth window out of range");
  const int L = truth.length();
  const int slack = std::max(1, static_cast<int>(L * (1.0 - cfg.iou_p)));
  for (int attempt = 0; attempt < cfg.positive_attempts; ++attempt) {
    Window w;
    w.start = truth.start + static_cast<int>(rng.uniform_int(-slack, slack));
    w.end = truth.end + static_cast<int>(rng.uniform_int(-slack, slack));
    w.start = std::max(w.start, 0);
    w.end = std::min(w.end, utt_frames);
    if (!w.valid()) continue;
    if (iou(truth, w) >= cfg.iou_p)
      return SampledExample{w, Polarity::kPositive, SampleSource::kSampled, -1};
  }
  return SampledExample{truth, Polarity::kPositive, SampleSource::kSampled, -1};
}

// Up to max_negatives windows with IOU strictly below iou_n. Lengths are
// uniform in [ceil(L/2), floor(3L/2)] so no placement can dip under the
// half-length bound; starts are uniform over the utterance. Returns fewer
// (possibly zero) windows when the utterance leaves no room.
inline std::vector<SampledExample> sample_negatives(int utt_frames, const Window& truth,
                                                    Rng& rng,
                                                    const SamplerConfig& cfg = {}) {
  KWS_CHECK(truth.valid() && truth.end <= utt_frames, "ground-truth window out of range");
  const int L = truth.length();
  const int lmin = std::max(1, (L + 1) / 2);
  const int lmax = std::max(lmin, (3 * L) / 2);
  std::vector<SampledExample> out;
  if (lmin > utt_frames) return out;
  for (int attempt = 0;
       attempt < cfg.negative_attempts && static_cast<int>(out.size()) < cfg.max_negatives;
       ++attempt) {
    int len = static_cast<int>(rng.uniform_int(lmin, std::min(lmax, utt_frames)));
    int start = static_cast<int>(rng.uniform_int(0, utt_frames - len));
    Window w{start, start + len};
    if (iou(truth, w) < cfg.iou_n)
      out.push_back(SampledExample{w, Polarity::kNegative, SampleSource::kSampled, -1});
  }
  return out;
}

// Hard negatives made from the ground-truth window itself: split near the
// middle (+-10% jitter) and swap the two halves. Windows shorter than two
// frames cannot be split.
inline std::vector<SampledExample> swap_augment(int utt_frames, const Window& truth,
                                                Rng& rng, const SamplerConfig& cfg = {}) {
  KWS_CHECK(truth.valid() && truth.end <= utt_frames, "ground-truth window out of range");
  const int L = truth.length();
  std::vector<SampledExample> out;
  if (L < 2) return out;
  const int jitter = static_cast<int>(L * cfg.swap_jitter_frac);
  for (int i = 0; i < cfg.swap_count; ++i) {
    int split = truth.start + L / 2 +
                static_cast<int>(rng.uniform_int(-jitter, jitter));
    split = std::min(std::max(split, truth.start + 1), truth.end - 1);
    out.push_back(
        SampledExample{truth, Polarity::kNegative, SampleSource::kSwapAugmented, split});
  }
  return out;
}

// Materializes the feature slice of an example. Swap-augmented examples are
// recomposed as [split, end) followed by [start, split).
inline Matrix slice_frames(const Matrix& feats, const SampledExample& ex) {
  const Window& w = ex.window;
  KWS_CHECK(w.valid() && w.end <= feats.rows(), "window outside feature matrix");
  if (ex.source == SampleSource::kSampled) return feats.slice_rows(w.start, w.end);
  KWS_CHECK(w.start < ex.swap_split && ex.swap_split < w.end, "bad swap split");
  Matrix out(w.length(), feats.cols());
  int r = 0;
  for (int t = ex.swap_split; t < w.end; ++t, ++r)
    for (int c = 0; c < feats.cols(); ++c) out(r, c) = feats(t, c);
  for (int t = w.start; t < ex.swap_split; ++t, ++r)
    for (int c = 0; c < feats.cols(); ++c) out(r, c) = feats(t, c);
  return out;
}

// Utterance frame that row `local_row` of slice_frames(ex) came from.
inline int source_frame(const SampledExample& ex, int local_row) {
  const Window& w = ex.window;
  if (ex.source == SampleSource::kSampled) return w.start + local_row;
  const int head = w.end - ex.swap_split;
  return local_row < head ? ex.swap_split + local_row
                          : w.start + (local_row - head);
}

// Class-imbalance mining: indices of the n_hard highest-loss members (stable
// on ties) plus n_rand uniform picks from the rest, order hard-then-random.
// Returns everything when fewer than n_hard + n_rand members exist.
inline std::vector<int> mine_hard_negatives(const std::vector<double>& losses,
                                            int n_hard, int n_rand, Rng& rng) {
  KWS_CHECK(!losses.empty(), "mine_hard_negatives: empty candidate list");
  const int n = static_cast<int>(losses.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return losses[a] > losses[b]; });
  const int hard = std::min(n_hard, n);
  std::vector<int> selected(order.begin(), order.begin() + hard);
  std::vector<int> rest(order.begin() + hard, order.end());
  std::sort(rest.begin(), rest.end());  // original order for the random pool
  const int rand_n = std::min<int>(n_rand, static_cast<int>(rest.size()));
  for (int i = 0; i < rand_n; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(0, static_cast<int64_t>(rest.size()) - 1 - i));
    std::swap(rest[i], rest[j]);
    selected.push_back(rest[i]);
  }
  return selected;
}

}  // namespace kws
