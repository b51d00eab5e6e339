// kws/config.hpp

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

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kws/error.hpp"
#include "kws/eval.hpp"
#include "kws/synth.hpp"
#include "kws/trainer.hpp"

namespace kws {

// One config file drives every subcommand; unknown keys are rejected,
// missing keys keep their defaults. Every run echoes the fully-resolved
// config next to its outputs so an experiment is reproducible from the echo
// alone.
struct AppConfig {
  uint64_t seed = 0;
  int threads = 1;

  SynthConfig synth;
  int num_utterances = 500;
  int num_test_utterances = 0;  // > 0 also writes manifest_test.jsonl

  int context_delta = 9;
  std::vector<int> layer_sizes = {247, 52, 20};

  TrainConfig train_ce;
  TrainConfig train_e2e;
  SamplerConfig sampler;
  EvalConfig eval;

  // HMM topology for estimation
  int hmm_num_states = 20;
  int hmm_first_kw = 2;
  int hmm_last_kw = 19;

  AppConfig() {
    train_ce.epochs = 5;
    train_e2e.epochs = 20;
  }

  // Copies the shared fields into the per-phase training configs.
  void finalize() {
    for (TrainConfig* tc : {&train_ce, &train_e2e}) {
      tc->seed = seed;
      tc->threads = threads;
      tc->context_delta = context_delta;
      tc->layer_sizes = layer_sizes;
      tc->sampler = sampler;
    }
    synth.seed = seed;
    eval.context_delta = context_delta;
    eval.threads = threads;
  }
};

namespace detail {

template <typename T>
inline void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void check_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                       const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : known)
      if (it.key() == k) ok = true;
    if (!ok) throw ValidationError("unknown config key \"" + it.key() + "\" in " + where);
  }
}

}  // namespace detail

inline nlohmann::json config_to_json(const AppConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["synth"] = {{"num_states", c.synth.num_states},
                {"keyword_chain_len", c.synth.keyword_chain_len},
                {"feature_dim", c.synth.feature_dim},
                {"mean_scale", c.synth.mean_scale},
                {"state_mean_separation", c.synth.state_mean_separation},
                {"noise_sigma", c.synth.noise_sigma},
                {"kw_dwell_mean", c.synth.kw_dwell_mean},
                {"sil_dwell_mean", c.synth.sil_dwell_mean},
                {"p_silence", c.synth.p_silence},
                {"min_frames", c.synth.min_frames},
                {"max_frames", c.synth.max_frames},
                {"num_utterances", c.num_utterances},
                {"num_test_utterances", c.num_test_utterances}};
  j["features"] = {{"context_delta", c.context_delta}};
  j["dnn"] = {{"layer_sizes", c.layer_sizes}};
  auto train_json = [](const TrainConfig& t) {
    return nlohmann::json{{"learning_rate", t.learning_rate},
                          {"epochs", t.epochs},
                          {"batch_utterances", t.batch_utterances},
                          {"gain_min", t.gain_min},
                          {"gain_max", t.gain_max},
                          {"n_hard", t.n_hard},
                          {"n_rand", t.n_rand}};
  };
  j["train_ce"] = train_json(c.train_ce);
  j["train_e2e"] = train_json(c.train_e2e);
  j["sampler"] = {{"iou_p", c.sampler.iou_p},
                  {"iou_n", c.sampler.iou_n},
                  {"max_negatives", c.sampler.max_negatives},
                  {"swap_count", c.sampler.swap_count}};
  j["eval"] = {{"nms_gap_frames", c.eval.nms_gap_frames},
               {"operating_fa_per_hour", c.eval.operating_fa_per_hour},
               {"max_thresholds", c.eval.max_thresholds},
               {"min_match_iou", c.eval.min_match_iou}};
  j["hmm"] = {{"num_states", c.hmm_num_states},
              {"first_kw", c.hmm_first_kw},
              {"last_kw", c.hmm_last_kw}};
  return j;
}

inline AppConfig config_from_json(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::get_if;
  AppConfig c;
  check_keys(j, {"seed", "threads", "synth", "features", "dnn", "train_ce", "train_e2e",
                 "sampler", "eval", "hmm"},
             "config root");
  get_if(j, "seed", c.seed);
  get_if(j, "threads", c.threads);
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    check_keys(s, {"num_states", "keyword_chain_len", "feature_dim", "mean_scale",
                   "state_mean_separation", "noise_sigma", "kw_dwell_mean",
                   "sil_dwell_mean", "p_silence", "min_frames", "max_frames",
                   "num_utterances", "num_test_utterances"},
               "synth");
    get_if(s, "num_states", c.synth.num_states);
    get_if(s, "keyword_chain_len", c.synth.keyword_chain_len);
    get_if(s, "feature_dim", c.synth.feature_dim);
    get_if(s, "mean_scale", c.synth.mean_scale);
    get_if(s, "state_mean_separation", c.synth.state_mean_separation);
    get_if(s, "noise_sigma", c.synth.noise_sigma);
    get_if(s, "kw_dwell_mean", c.synth.kw_dwell_mean);
    get_if(s, "sil_dwell_mean", c.synth.sil_dwell_mean);
    get_if(s, "p_silence", c.synth.p_silence);
    get_if(s, "min_frames", c.synth.min_frames);
    get_if(s, "max_frames", c.synth.max_frames);
    get_if(s, "num_utterances", c.num_utterances);
    get_if(s, "num_test_utterances", c.num_test_utterances);
  }
  if (j.contains("features")) {
    check_keys(j.at("features"), {"context_delta"}, "features");
    get_if(j.at("features"), "context_delta", c.context_delta);
  }
  if (j.contains("dnn")) {
    check_keys(j.at("dnn"), {"layer_sizes"}, "dnn");
    get_if(j.at("dnn"), "layer_sizes", c.layer_sizes);
  }
  auto read_train = [&](const char* key, TrainConfig& t) {
    if (!j.contains(key)) return;
    const auto& s = j.at(key);
    check_keys(s, {"learning_rate", "epochs", "batch_utterances", "gain_min", "gain_max",
                   "n_hard", "n_rand"},
               key);
    get_if(s, "learning_rate", t.learning_rate);
    get_if(s, "epochs", t.epochs);
    get_if(s, "batch_utterances", t.batch_utterances);
    get_if(s, "gain_min", t.gain_min);
    get_if(s, "gain_max", t.gain_max);
    get_if(s, "n_hard", t.n_hard);
    get_if(s, "n_rand", t.n_rand);
  };
  read_train("train_ce", c.train_ce);
  read_train("train_e2e", c.train_e2e);
  if (j.contains("sampler")) {
    const auto& s = j.at("sampler");
    check_keys(s, {"iou_p", "iou_n", "max_negatives", "swap_count"}, "sampler");
    get_if(s, "iou_p", c.sampler.iou_p);
    get_if(s, "iou_n", c.sampler.iou_n);
    get_if(s, "max_negatives", c.sampler.max_negatives);
    get_if(s, "swap_count", c.sampler.swap_count);
  }
  if (j.contains("eval")) {
    const auto& s = j.at("eval");
    check_keys(s, {"nms_gap_frames", "operating_fa_per_hour", "max_thresholds",
                   "min_match_iou"},
               "eval");
    get_if(s, "nms_gap_frames", c.eval.nms_gap_frames);
    get_if(s, "operating_fa_per_hour", c.eval.operating_fa_per_hour);
    get_if(s, "max_thresholds", c.eval.max_thresholds);
    get_if(s, "min_match_iou", c.eval.min_match_iou);
  }
  if (j.contains("hmm")) {
    const auto& s = j.at("hmm");
    check_keys(s, {"num_states", "first_kw", "last_kw"}, "hmm");
    get_if(s, "num_states", c.hmm_num_states);
    get_if(s, "first_kw", c.hmm_first_kw);
    get_if(s, "last_kw", c.hmm_last_kw);
  }
  return c;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open config: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config parse error in " + path + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config error in " + path + ": " + e.what());
  }
}

inline void save_config(const AppConfig& c, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << config_to_json(c).dump(2) << "\n";
  if (!os) throw ValidationError("failed writing config: " + path);
}

}  // namespace kws
