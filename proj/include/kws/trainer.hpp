// kws/trainer.hpp

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
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "kws/corpus.hpp"
#include "kws/dnn.hpp"
#include "kws/e2e_loss.hpp"
#include "kws/error.hpp"
#include "kws/hmm.hpp"
#include "kws/parallel.hpp"
#include "kws/rng.hpp"
#include "kws/sampling.hpp"

namespace kws {

struct TrainConfig {
  std::vector<int> layer_sizes = {247, 52, 20};
  double learning_rate = 0.001;
  int batch_utterances = 48;
  int epochs = 5;
  uint64_t seed = 0;
  int threads = 1;
  int context_delta = 9;

  // Adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // e2e sampling and mining
  SamplerConfig sampler;
  int n_hard = 50;
  int n_rand = 50;

  // gain augmentation: per-utterance scalar, uniform in [gain_min, gain_max]
  double gain_min = 1.0;
  double gain_max = 1.0;

  void validate() const {
    KWS_CHECK(learning_rate > 0.0, "learning_rate must be positive");
    KWS_CHECK(batch_utterances >= 1, "batch_utterances must be >= 1");
    KWS_CHECK(epochs >= 1, "epochs must be >= 1");
    KWS_CHECK(layer_sizes.size() >= 2, "layer_sizes must name input and output");
    KWS_CHECK(context_delta >= 0, "context_delta must be >= 0");
    KWS_CHECK(0.0 < gain_min && gain_min <= gain_max, "bad gain range");
  }
};

// CSV training log: epoch,batch,phase,loss,pos_mean_score,neg_mean_score.
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(const std::string& path) {
    if (!path.empty()) {
      os_.open(path);
      if (!os_) throw ValidationError("cannot open training log: " + path);
      os_ << "epoch,batch,phase,loss,pos_mean_score,neg_mean_score\n";
    }
  }
  void row(int epoch, int batch, const char* phase, double loss, double pos, double neg) {
    if (!os_.is_open()) return;
    os_ << epoch << ',' << batch << ',' << phase << ',' << loss << ',' << pos << ','
        << neg << '\n';
    os_.flush();
  }

 private:
  std::ofstream os_;
};

namespace detail {

inline uint64_t mix3(uint64_t a, uint64_t b, uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<std::vector<double>> m_b, v_b;
  int64_t step = 0;

  explicit AdamState(const DnnParams& p) {
    for (int l = 0; l < p.num_layers(); ++l) {
      m_w.emplace_back(p.weights[l].rows(), p.weights[l].cols());
      v_w.emplace_back(p.weights[l].rows(), p.weights[l].cols());
      m_b.emplace_back(p.biases[l].size(), 0.0);
      v_b.emplace_back(p.biases[l].size(), 0.0);
    }
  }

  void update(DnnParams& p, const DnnGrads& g, const TrainConfig& cfg) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    auto apply = [&](double& theta, double grad, double& m, double& v) {
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad * grad;
      theta -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
    };
    for (int l = 0; l < p.num_layers(); ++l) {
      auto& w = p.weights[l].data();
      const auto& gw = g.weights[l].data();
      auto& mw = m_w[l].data();
      auto& vw = v_w[l].data();
      for (size_t i = 0; i < w.size(); ++i) apply(w[i], gw[i], mw[i], vw[i]);
      for (size_t i = 0; i < p.biases[l].size(); ++i)
        apply(p.biases[l][i], g.biases[l][i], m_b[l][i], v_b[l][i]);
    }
    for (int l = 0; l < p.num_layers(); ++l) {
      if (!p.weights[l].all_finite())
        throw std::runtime_error("optimizer produced non-finite parameters");
      for (double b : p.biases[l])
        if (!std::isfinite(b))
          throw std::runtime_error("optimizer produced non-finite parameters");
    }
  }
};

inline void accumulate(DnnGrads& into, const DnnGrads& from) {
  if (into.weights.empty()) {
    into = from;
    return;
  }
  for (size_t l = 0; l < into.weights.size(); ++l) {
    auto& a = into.weights[l].data();
    const auto& b = from.weights[l].data();
    for (size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    for (size_t i = 0; i < into.biases[l].size(); ++i)
      into.biases[l][i] += from.biases[l][i];
  }
}

// Stacked (and optionally gain-scaled) input for one utterance.
inline Matrix training_input(const LabeledUtterance& utt, int delta, double gain) {
  Matrix base = utt.base_features;
  if (gain != 1.0)
    for (double& v : base.data()) v *= gain;
  return stack_context(base, delta).frames;
}

inline double draw_gain(const TrainConfig& cfg, int epoch, int utt_index) {
  if (cfg.gain_min == 1.0 && cfg.gain_max == 1.0) return 1.0;
  Rng rng(mix3(cfg.seed, 0xa4611000ull + static_cast<uint64_t>(epoch), utt_index));
  return rng.uniform(cfg.gain_min, cfg.gain_max);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Phase 1: frame-level cross-entropy pretraining.

struct CeResult {
  DnnParams params;
  std::vector<double> epoch_losses;  // mean CE per frame, one entry per epoch
};

inline CeResult pretrain_ce(const std::vector<LabeledUtterance>& corpus,
                            const TrainConfig& cfg, TrainLog* log = nullptr) {
  cfg.validate();
  KWS_CHECK(!corpus.empty(), "empty corpus");
  const int C = cfg.layer_sizes.back();
  for (const auto& utt : corpus) {
    KWS_CHECK(!utt.labels.empty(), "utterance without labels: " + utt.id);
    for (int s : utt.labels)
      KWS_CHECK(0 <= s && s < C, "label out of range in utterance " + utt.id);
  }

  CeResult res;
  res.params = init_params(cfg.layer_sizes, cfg.seed);
  detail::AdamState adam(res.params);

  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(detail::mix3(cfg.seed, 0xce000000ull, epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    int64_t epoch_frames = 0;

    for (size_t begin = 0, batch_id = 0; begin < order.size();
         begin += cfg.batch_utterances, ++batch_id) {
      const size_t end = std::min(begin + cfg.batch_utterances, order.size());
      const int members = static_cast<int>(end - begin);

      int64_t batch_frames = 0;
      for (int i = 0; i < members; ++i)
        batch_frames += corpus[order[begin + i]].labels.size();

      std::vector<DnnGrads> member_grads(members);
      std::vector<double> member_loss(members, 0.0);
      parallel_for(members, cfg.threads, [&](int i) {
        const LabeledUtterance& utt = corpus[order[begin + i]];
        const double gain = detail::draw_gain(cfg, epoch, order[begin + i]);
        Matrix input = detail::training_input(utt, cfg.context_delta, gain);
        DnnOutput out = forward(res.params, input);
        const int T = input.rows();
        Matrix grad(T, C);
        double loss = 0.0;
        for (int t = 0; t < T; ++t) {
          loss -= out.log_posteriors(t, utt.labels[t]);
          grad(t, utt.labels[t]) = -1.0 / static_cast<double>(batch_frames);
        }
        member_loss[i] = loss;
        member_grads[i] = backward(res.params, input, grad);
      });

      DnnGrads total;
      double batch_loss = 0.0;
      for (int i = 0; i < members; ++i) {
        detail::accumulate(total, member_grads[i]);
        batch_loss += member_loss[i];
      }
      batch_loss /= static_cast<double>(batch_frames);
      adam.update(res.params, total, cfg);

      epoch_loss += batch_loss * static_cast<double>(batch_frames);
      epoch_frames += batch_frames;
      if (log) {
        const double nan = std::nan("");
        log->row(epoch, static_cast<int>(batch_id), "ce", batch_loss, nan, nan);
      }
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(epoch_frames));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Phase 2: end-to-end fine-tuning of the detection score.
//
// Per batch: from each of batch_utterances utterances take 1 positive window,
// up to max_negatives sampled negatives and swap_count swap negatives; score
// every window through the differentiable decoder; keep n_hard + n_rand
// negatives by hinge loss; average the hinge over contributing windows and
// push one Adam step through the DNN. HMM parameters stay fixed.

struct E2eResult {
  DnnParams params;
  int64_t skipped_windows = 0;  // windows shorter than the keyword chain
  int64_t positives_scored = 0;
  int64_t negatives_scored = 0;
  int64_t negatives_selected = 0;
  int64_t batches = 0;
};

inline E2eResult train_e2e(const std::vector<LabeledUtterance>& corpus,
                           const DnnParams& init, const HmmParams& hmm,
                           const TrainConfig& cfg, TrainLog* log = nullptr) {
  cfg.validate();
  hmm.validate();
  KWS_CHECK(!corpus.empty(), "empty corpus");
  KWS_CHECK(init.num_classes() == hmm.num_states,
            "network classes do not match HMM state count");
  const int K = hmm.chain_len();

  for (const auto& utt : corpus)
    KWS_CHECK(utt.keyword.valid(), "utterance without keyword window: " + utt.id);

  E2eResult res;
  res.params = init;
  detail::AdamState adam(res.params);  // optimizer state resets between phases

  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);

  struct ScoredWindow {
    int member;         // batch member index
    SampledExample ex;
    WindowScore ws;
    double hinge = 0.0;
    double dloss_dd = 0.0;
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(detail::mix3(cfg.seed, 0xe2e00000ull, epoch));
    shuffle_rng.shuffle(order);

    for (size_t begin = 0, batch_id = 0; begin < order.size();
         begin += cfg.batch_utterances, ++batch_id) {
      const size_t end = std::min(begin + cfg.batch_utterances, order.size());
      const int members = static_cast<int>(end - begin);

      std::vector<Matrix> inputs(members);        // stacked features
      std::vector<Matrix> scaled(members);        // scaled log-likelihoods
      std::vector<std::vector<ScoredWindow>> member_windows(members);
      std::vector<int64_t> member_skipped(members, 0);

      parallel_for(members, cfg.threads, [&](int i) {
        const int utt_index = order[begin + i];
        const LabeledUtterance& utt = corpus[utt_index];
        const double gain = detail::draw_gain(cfg, epoch, utt_index);
        inputs[i] = detail::training_input(utt, cfg.context_delta, gain);
        DnnOutput out = forward(res.params, inputs[i]);
        scaled[i] = scaled_loglik(out, hmm);
        const int T = inputs[i].rows();

        Rng rng(detail::mix3(cfg.seed, 0x5a3e0000ull + static_cast<uint64_t>(epoch),
                             utt_index));
        std::vector<SampledExample> examples;
        examples.push_back(sample_positive(T, utt.keyword, rng, cfg.sampler));
        for (auto& e : sample_negatives(T, utt.keyword, rng, cfg.sampler))
          examples.push_back(std::move(e));
        for (auto& e : swap_augment(T, utt.keyword, rng, cfg.sampler))
          examples.push_back(std::move(e));

        for (const auto& ex : examples) {
          if (ex.window.length() < K) {
            ++member_skipped[i];
            continue;
          }
          Matrix win_scores = ex.source == SampleSource::kSampled
                                  ? scaled[i].slice_rows(ex.window.start, ex.window.end)
                                  : slice_frames(scaled[i], ex);
          ScoredWindow sw;
          sw.member = i;
          sw.ex = ex;
          sw.ws = score_window(win_scores, hmm);
          member_windows[i].push_back(std::move(sw));
        }
      });

      // pool windows; mine the negatives batch-wide
      std::vector<ScoredWindow> positives;
      std::vector<ScoredWindow> negatives;
      for (int i = 0; i < members; ++i) {
        res.skipped_windows += member_skipped[i];
        for (auto& sw : member_windows[i]) {
          if (sw.ex.polarity == Polarity::kPositive)
            positives.push_back(std::move(sw));
          else
            negatives.push_back(std::move(sw));
        }
      }

      std::vector<double> neg_losses(negatives.size());
      double neg_score_sum = 0.0;
      for (size_t j = 0; j < negatives.size(); ++j) {
        HingeResult h = hinge_loss(negatives[j].ws.d, false);
        negatives[j].hinge = h.loss;
        negatives[j].dloss_dd = h.dloss_dd;
        neg_losses[j] = h.loss;
        neg_score_sum += negatives[j].ws.d;
      }
      double pos_score_sum = 0.0;
      for (auto& p : positives) {
        HingeResult h = hinge_loss(p.ws.d, true);
        p.hinge = h.loss;
        p.dloss_dd = h.dloss_dd;
        pos_score_sum += p.ws.d;
      }

      std::vector<int> chosen;
      if (!negatives.empty()) {
        Rng mine_rng(detail::mix3(cfg.seed, 0x313e0000ull + static_cast<uint64_t>(epoch),
                                  batch_id));
        chosen = mine_hard_negatives(neg_losses, cfg.n_hard, cfg.n_rand, mine_rng);
      }
      ++res.batches;
      res.positives_scored += static_cast<int64_t>(positives.size());
      res.negatives_scored += static_cast<int64_t>(negatives.size());
      res.negatives_selected += static_cast<int64_t>(chosen.size());

      const int contributing = static_cast<int>(positives.size() + chosen.size());
      if (contributing == 0) continue;
      const double inv_n = 1.0 / static_cast<double>(contributing);

      // scatter window subgradients into utterance-level grids
      std::vector<Matrix> grad_log_post(members);
      auto scatter = [&](const ScoredWindow& sw) {
        if (sw.dloss_dd == 0.0) return;
        Matrix& G = grad_log_post[sw.member];
        if (G.empty()) G = Matrix(scaled[sw.member].rows(), scaled[sw.member].cols());
        const double g = sw.dloss_dd * inv_n / static_cast<double>(sw.ws.num_frames);
        for (int t = 0; t < sw.ws.num_frames; ++t)
          G(source_frame(sw.ex, t), sw.ws.argmax_path[t]) += g;
      };
      double batch_loss = 0.0;
      for (const auto& p : positives) {
        scatter(p);
        batch_loss += p.hinge;
      }
      for (int idx : chosen) {
        scatter(negatives[idx]);
        batch_loss += negatives[idx].hinge;
      }
      batch_loss *= inv_n;

      // note: d(scaled)/d(log_post) is the identity, so grids pass through
      std::vector<DnnGrads> member_grads(members);
      parallel_for(members, cfg.threads, [&](int i) {
        if (!grad_log_post[i].empty())
          member_grads[i] = backward(res.params, inputs[i], grad_log_post[i]);
      });
      DnnGrads total;
      for (int i = 0; i < members; ++i)
        if (!member_grads[i].weights.empty()) detail::accumulate(total, member_grads[i]);
      if (total.weights.empty()) continue;
      adam.update(res.params, total, cfg);

      if (log) {
        const double pos_mean =
            positives.empty() ? std::nan("") : pos_score_sum / positives.size();
        const double neg_mean =
            negatives.empty() ? std::nan("") : neg_score_sum / negatives.size();
        log->row(epoch, static_cast<int>(batch_id), "e2e", batch_loss, pos_mean, neg_mean);
      }
    }
  }
  return res;
}

}  // namespace kws
