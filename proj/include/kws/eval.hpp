// kws/eval.hpp

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
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kws/corpus.hpp"
#include "kws/decoder.hpp"
#include "kws/dnn.hpp"
#include "kws/e2e_loss.hpp"
#include "kws/error.hpp"
#include "kws/hmm.hpp"
#include "kws/parallel.hpp"
#include "kws/sampling.hpp"

namespace kws {

// A decoder detection attributed to one utterance of the test set.
struct ScoredDetection {
  int utt_index = 0;
  double score = 0.0;
  int start_frame = 0;  // inclusive
  int end_frame = 0;    // inclusive
};

// Ground-truth keyword window of one utterance.
struct GroundTruth {
  int utt_index = 0;
  Window window;
};

inline Window detection_window(const ScoredDetection& d) {
  return Window{d.start_frame, d.end_frame + 1};
}

inline bool score_desc_order(const ScoredDetection& a, const ScoredDetection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.utt_index != b.utt_index) return a.utt_index < b.utt_index;
  return a.end_frame < b.end_frame;
}

// Keeps score maxima separated by at least min_gap_frames (per utterance,
// by detection end frame). Streaming scores fire on nearly every frame
// around a keyword; without this dedup FA counts are meaningless.
inline std::vector<ScoredDetection> nms(std::vector<ScoredDetection> dets,
                                        int min_gap_frames) {
  std::sort(dets.begin(), dets.end(), score_desc_order);
  std::vector<ScoredDetection> kept;
  for (const auto& d : dets) {
    bool blocked = false;
    for (const auto& k : kept) {
      if (k.utt_index == d.utt_index &&
          std::abs(k.end_frame - d.end_frame) < min_gap_frames) {
        blocked = true;
        break;
      }
    }
    if (!blocked) kept.push_back(d);
  }
  return kept;
}

struct MatchCounts {
  int tp = 0;
  int fa = 0;
  int fr = 0;
};

struct TpPair {
  Window detected;
  Window truth;
};

// Greedy score-descending matching. A detection overlapping an unmatched
// ground truth of its utterance is a true positive and consumes it; any
// other detection is a false accept; leftover ground truths are false
// rejects. Detections must already be thresholded and NMS-deduplicated.
inline MatchCounts match_detections(std::vector<ScoredDetection> dets,
                                    const std::vector<GroundTruth>& truths,
                                    std::vector<TpPair>* tp_pairs = nullptr,
                                    double min_match_iou = 0.0) {
  std::sort(dets.begin(), dets.end(), score_desc_order);
  std::vector<bool> used(truths.size(), false);
  MatchCounts counts;
  for (const auto& d : dets) {
    const Window dw = detection_window(d);
    bool matched = false;
    for (size_t g = 0; g < truths.size(); ++g) {
      if (used[g] || truths[g].utt_index != d.utt_index) continue;
      const Window& gw = truths[g].window;
      const bool overlaps = std::min(dw.end, gw.end) > std::max(dw.start, gw.start);
      if (!overlaps) continue;
      if (min_match_iou > 0.0 && iou(gw, dw) < min_match_iou) continue;
      used[g] = true;
      matched = true;
      ++counts.tp;
      if (tp_pairs) tp_pairs->push_back(TpPair{dw, gw});
      break;
    }
    if (!matched) ++counts.fa;
  }
  for (bool u : used)
    if (!u) ++counts.fr;
  return counts;
}

struct DetPoint {
  double threshold = 0.0;
  double fa_per_hour = 0.0;
  double frr = 0.0;
};

struct EvalConfig {
  int nms_gap_frames = 100;          // 1 s at the 10 ms hop
  double operating_fa_per_hour = 15.0;
  int max_thresholds = 200;
  double min_match_iou = 0.0;        // 0 = any overlap counts (literal reading)
  int context_delta = 9;
  double frame_hop = 0.010;
  int threads = 1;
};

// Threshold sweep. For each threshold the raw detections are filtered,
// NMS-deduplicated and matched; FRR = FR/(TP+FR), FA/hr = FA/total_hours.
inline std::vector<DetPoint> det_curve(const std::vector<ScoredDetection>& all_dets,
                                       const std::vector<GroundTruth>& truths,
                                       double total_hours,
                                       std::vector<double> thresholds = {},
                                       const EvalConfig& cfg = {}) {
  KWS_CHECK(total_hours > 0.0, "total_hours must be positive");
  if (truths.empty()) throw ValidationError("no keyword windows in manifest");

  if (thresholds.empty()) {
    std::vector<double> scores;
    scores.reserve(all_dets.size());
    for (const auto& d : all_dets) scores.push_back(d.score);
    std::sort(scores.begin(), scores.end());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    if (scores.empty()) scores.push_back(0.0);
    const size_t step = std::max<size_t>(1, scores.size() / cfg.max_thresholds);
    for (size_t i = 0; i < scores.size(); i += step) thresholds.push_back(scores[i]);
    if (thresholds.back() != scores.back()) thresholds.push_back(scores.back());
  }
  std::sort(thresholds.begin(), thresholds.end());

  std::vector<DetPoint> points(thresholds.size());
  parallel_for(static_cast<int>(thresholds.size()), cfg.threads, [&](int i) {
    const double tau = thresholds[i];
    std::vector<ScoredDetection> kept;
    for (const auto& d : all_dets)
      if (d.score >= tau) kept.push_back(d);
    kept = nms(std::move(kept), cfg.nms_gap_frames);
    MatchCounts mc = match_detections(std::move(kept), truths, nullptr, cfg.min_match_iou);
    DetPoint p;
    p.threshold = tau;
    p.fa_per_hour = mc.fa / total_hours;
    p.frr = static_cast<double>(mc.fr) / (mc.tp + mc.fr);
    points[i] = p;
  });
  return points;
}

// FRR at a target FA/hr by linear interpolation between the bracketing sweep
// points, on the lower envelope of the curve (several thresholds can share
// one FA count; the smallest FRR among them is the achievable one). Clamped
// to the end points outside the observed range.
inline double frr_at_fa(std::vector<DetPoint> points, double target_fa_per_hour) {
  KWS_CHECK(!points.empty(), "empty DET curve");
  std::sort(points.begin(), points.end(), [](const DetPoint& a, const DetPoint& b) {
    if (a.fa_per_hour != b.fa_per_hour) return a.fa_per_hour < b.fa_per_hour;
    return a.frr < b.frr;
  });
  std::vector<DetPoint> envelope;
  for (const auto& p : points)
    if (envelope.empty() || p.fa_per_hour != envelope.back().fa_per_hour)
      envelope.push_back(p);
  if (target_fa_per_hour <= envelope.front().fa_per_hour) return envelope.front().frr;
  if (target_fa_per_hour >= envelope.back().fa_per_hour) return envelope.back().frr;
  for (size_t i = 1; i < envelope.size(); ++i) {
    if (envelope[i].fa_per_hour >= target_fa_per_hour) {
      const DetPoint& lo = envelope[i - 1];
      const DetPoint& hi = envelope[i];
      const double w = (target_fa_per_hour - lo.fa_per_hour) /
                       (hi.fa_per_hour - lo.fa_per_hour);
      return lo.frr + w * (hi.frr - lo.frr);
    }
  }
  return envelope.back().frr;
}

struct LocalizationMetrics {
  double mean_tp_iou = 0.0;
  double mean_abs_start_end_error_sec = 0.0;
};

// Localization over matched pairs; empty TP set leaves the metric undefined.
inline std::optional<LocalizationMetrics> localization_metrics(
    const std::vector<TpPair>& pairs, double frame_hop = 0.010) {
  if (pairs.empty()) return std::nullopt;
  LocalizationMetrics m;
  for (const auto& p : pairs) {
    m.mean_tp_iou += iou(p.truth, p.detected);
    m.mean_abs_start_end_error_sec +=
        0.5 * (std::abs(p.detected.start - p.truth.start) +
               std::abs(p.detected.end - p.truth.end)) *
        frame_hop;
  }
  m.mean_tp_iou /= pairs.size();
  m.mean_abs_start_end_error_sec /= pairs.size();
  return m;
}

struct ConfusionResult {
  Matrix counts;  // rows true state, cols predicted argmax
  double accuracy = 0.0;
};

// Frame-level confusion of the DNN argmax against the reference labels.
// Argmax ties resolve to the lowest class index.
inline ConfusionResult confusion_matrix(const DnnParams& params,
                                        const std::vector<LabeledUtterance>& corpus,
                                        int context_delta, int threads = 1) {
  const int C = params.num_classes();
  std::vector<Matrix> partial(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), threads, [&](int i) {
    const LabeledUtterance& utt = corpus[i];
    Matrix m(C, C);
    DnnOutput out = forward(params, stack_context(utt.base_features, context_delta).frames);
    for (int t = 0; t < out.log_posteriors.rows(); ++t) {
      const double* row = out.log_posteriors.row(t);
      int best = 0;
      for (int c = 1; c < C; ++c)
        if (row[c] > row[best]) best = c;
      KWS_CHECK(0 <= utt.labels[t] && utt.labels[t] < C, "label out of range");
      m(utt.labels[t], best) += 1.0;
    }
    partial[i] = std::move(m);
  });
  ConfusionResult res;
  res.counts = Matrix(C, C);
  for (const auto& m : partial)
    for (int r = 0; r < C; ++r)
      for (int c = 0; c < C; ++c) res.counts(r, c) += m(r, c);
  double total = 0.0, diag = 0.0;
  for (int r = 0; r < C; ++r)
    for (int c = 0; c < C; ++c) {
      total += res.counts(r, c);
      if (r == c) diag += res.counts(r, c);
    }
  res.accuracy = total > 0.0 ? diag / total : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Whole-corpus evaluation driver shared by the CLI and the experiment.

struct EvalReport {
  std::vector<DetPoint> det_points;
  double operating_fa_per_hour = 15.0;
  double frr_at_operating_fa = 0.0;
  std::optional<LocalizationMetrics> localization;
  Matrix confusion;
  double state_accuracy = 0.0;
  double total_hours = 0.0;
  int num_ground_truths = 0;
};

// Runs the decoder over every utterance and returns the raw per-frame
// detection candidates.
inline std::vector<ScoredDetection> decode_corpus(const DnnParams& params,
                                                  const HmmParams& hmm,
                                                  const std::vector<LabeledUtterance>& corpus,
                                                  int context_delta, int threads = 1) {
  std::vector<std::vector<ScoredDetection>> per_utt(corpus.size());
  parallel_for(static_cast<int>(corpus.size()), threads, [&](int i) {
    DnnOutput out =
        forward(params, stack_context(corpus[i].base_features, context_delta).frames);
    Matrix scores = scaled_loglik(out, hmm);
    for (const Detection& d : viterbi_stream(scores, hmm))
      per_utt[i].push_back(ScoredDetection{i, d.score, d.start_frame, d.end_frame});
  });
  std::vector<ScoredDetection> all;
  for (auto& v : per_utt)
    for (auto& d : v) all.push_back(d);
  return all;
}

inline EvalReport evaluate(const DnnParams& params, const HmmParams& hmm,
                           const std::vector<LabeledUtterance>& corpus,
                           const EvalConfig& cfg = {}) {
  std::vector<GroundTruth> truths;
  int64_t total_frames = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    total_frames += corpus[i].base_features.rows();
    if (corpus[i].keyword.valid())
      truths.push_back(GroundTruth{static_cast<int>(i), corpus[i].keyword});
  }
  if (truths.empty()) throw ValidationError("no keyword windows in manifest");

  EvalReport report;
  report.total_hours = total_frames * cfg.frame_hop / 3600.0;
  report.num_ground_truths = static_cast<int>(truths.size());
  report.operating_fa_per_hour = cfg.operating_fa_per_hour;

  const auto dets = decode_corpus(params, hmm, corpus, cfg.context_delta, cfg.threads);
  report.det_points = det_curve(dets, truths, report.total_hours, {}, cfg);
  report.frr_at_operating_fa = frr_at_fa(report.det_points, cfg.operating_fa_per_hour);

  // localization at the sweep point closest to the operating FA/hr
  const DetPoint* best = nullptr;
  for (const auto& p : report.det_points) {
    if (!best || std::abs(p.fa_per_hour - cfg.operating_fa_per_hour) <
                     std::abs(best->fa_per_hour - cfg.operating_fa_per_hour) ||
        (std::abs(p.fa_per_hour - cfg.operating_fa_per_hour) ==
             std::abs(best->fa_per_hour - cfg.operating_fa_per_hour) &&
         p.threshold > best->threshold))
      best = &p;
  }
  if (best) {
    std::vector<ScoredDetection> kept;
    for (const auto& d : dets)
      if (d.score >= best->threshold) kept.push_back(d);
    kept = nms(std::move(kept), cfg.nms_gap_frames);
    std::vector<TpPair> pairs;
    match_detections(std::move(kept), truths, &pairs, cfg.min_match_iou);
    report.localization = localization_metrics(pairs, cfg.frame_hop);
  }

  const bool have_labels =
      !corpus.empty() && !corpus.front().labels.empty();
  if (have_labels) {
    ConfusionResult conf = confusion_matrix(params, corpus, cfg.context_delta, cfg.threads);
    report.confusion = std::move(conf.counts);
    report.state_accuracy = conf.accuracy;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report files: DET points as CSV, scalar summary as JSON, confusion as CSV.

inline void write_det_csv(const std::vector<DetPoint>& points, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "threshold,fa_per_hour,frr\n";
  os.precision(17);
  for (const auto& p : points)
    os << p.threshold << ',' << p.fa_per_hour << ',' << p.frr << '\n';
  if (!os) throw ValidationError("failed writing DET csv: " + path);
}

inline void write_confusion_csv(const Matrix& confusion, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  for (int r = 0; r < confusion.rows(); ++r) {
    for (int c = 0; c < confusion.cols(); ++c) {
      if (c) os << ',';
      os << confusion(r, c);
    }
    os << '\n';
  }
  if (!os) throw ValidationError("failed writing confusion csv: " + path);
}

inline void write_summary_json(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["frr_at_operating_fa"] = report.frr_at_operating_fa;
  j["operating_fa_per_hour"] = report.operating_fa_per_hour;
  j["total_hours"] = report.total_hours;
  j["num_ground_truths"] = report.num_ground_truths;
  j["state_accuracy"] = report.state_accuracy;
  if (report.localization) {
    j["mean_tp_iou"] = report.localization->mean_tp_iou;
    j["mean_abs_start_end_error_sec"] = report.localization->mean_abs_start_end_error_sec;
  } else {
    j["mean_tp_iou"] = nullptr;
    j["mean_abs_start_end_error_sec"] = nullptr;
  }
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << j.dump(2) << "\n";
  if (!os) throw ValidationError("failed writing summary json: " + path);
}

}  // namespace kws
