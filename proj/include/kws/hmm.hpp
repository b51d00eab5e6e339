// kws/hmm.hpp

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
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "kws/dnn.hpp"
#include "kws/error.hpp"
#include "kws/matrix.hpp"

namespace kws {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Bakis (left-to-right) HMM over C states. The state layout used throughout
// the project: 0 = background, 1 = silence, [first_kw, last_kw] = keyword
// chain. Transition structure is self-loop + single forward step, plus one
// always-on entry arc background -> first keyword state for streaming
// detection. All probabilities are stored as natural logs.
struct HmmParams {
  int num_states = 20;
  int first_kw = 2;
  int last_kw = 19;
  std::vector<double> log_priors;      // C, first-frame distribution
  std::vector<double> log_self;        // C, log b(i -> i)
  std::vector<double> log_forward;     // C-1, [i] = log b(i -> i+1)
  double log_entry = kNegInf;          // log b(background -> first_kw)
  std::vector<double> log_class_freq;  // C, empirical state frequencies

  int chain_len() const { return last_kw - first_kw + 1; }

  void validate() const {
    KWS_CHECK(num_states >= 1, "num_states must be >= 1");
    KWS_CHECK(0 <= first_kw && first_kw <= last_kw && last_kw < num_states,
              "keyword chain range out of bounds");
    KWS_CHECK(static_cast<int>(log_priors.size()) == num_states, "log_priors size");
    KWS_CHECK(static_cast<int>(log_self.size()) == num_states, "log_self size");
    KWS_CHECK(static_cast<int>(log_forward.size()) == num_states - 1, "log_forward size");
    KWS_CHECK(static_cast<int>(log_class_freq.size()) == num_states, "log_class_freq size");
    double prior_sum = 0.0;
    for (double lp : log_priors) prior_sum += std::exp(lp);
    KWS_CHECK(std::fabs(prior_sum - 1.0) <= 1e-9, "priors must sum to 1");
    for (double lf : log_class_freq)
      KWS_CHECK(std::isfinite(lf), "class frequencies must be strictly positive");
    for (int i = first_kw; i <= last_kw; ++i) {
      double total = std::exp(log_self[i]);
      if (i < num_states - 1) total += std::exp(log_forward[i]);
      KWS_CHECK(total <= 1.0 + 1e-9, "self+forward probability exceeds 1 for chain state");
    }
  }
};

// Maximum-likelihood estimation from per-frame state labels with add-1
// smoothing. For each state the permitted successors are itself and its
// right neighbor; the background state additionally permits the entry jump
// into the first keyword state. Transitions outside this structure are
// ignored.
inline HmmParams estimate_hmm(const std::vector<std::vector<int>>& label_seqs,
                              int num_states, int first_kw, int last_kw) {
  KWS_CHECK(!label_seqs.empty(), "empty corpus");
  const int C = num_states;
  std::vector<std::vector<int64_t>> bigram(C, std::vector<int64_t>(C, 0));
  std::vector<int64_t> first_counts(C, 0), total_counts(C, 0);
  for (const auto& seq : label_seqs) {
    KWS_CHECK(!seq.empty(), "empty utterance in corpus");
    for (size_t t = 0; t < seq.size(); ++t) {
      int s = seq[t];
      KWS_CHECK(0 <= s && s < C, "state label out of range");
      ++total_counts[s];
      if (t == 0) ++first_counts[s];
      if (t + 1 < seq.size()) ++bigram[s][seq[t + 1]];
    }
  }

  HmmParams hmm;
  hmm.num_states = C;
  hmm.first_kw = first_kw;
  hmm.last_kw = last_kw;
  hmm.log_self.assign(C, 0.0);
  hmm.log_forward.assign(std::max(C - 1, 0), 0.0);
  for (int i = 0; i < C; ++i) {
    const bool has_forward = i + 1 < C;
    const bool has_entry = i == 0 && first_kw >= 2;
    int64_t c_self = bigram[i][i];
    int64_t c_fwd = has_forward ? bigram[i][i + 1] : 0;
    int64_t c_entry = has_entry ? bigram[0][first_kw] : 0;
    int permitted = 1 + (has_forward ? 1 : 0) + (has_entry ? 1 : 0);
    double deno = static_cast<double>(c_self + c_fwd + c_entry + permitted);
    hmm.log_self[i] = std::log((c_self + 1) / deno);
    if (has_forward) hmm.log_forward[i] = std::log((c_fwd + 1) / deno);
    if (has_entry) hmm.log_entry = std::log((c_entry + 1) / deno);
  }
  if (first_kw == 1 && C >= 2) hmm.log_entry = hmm.log_forward[0];

  const int64_t num_utts = static_cast<int64_t>(label_seqs.size());
  int64_t grand_total = 0;
  for (int64_t c : total_counts) grand_total += c;
  hmm.log_priors.resize(C);
  hmm.log_class_freq.resize(C);
  for (int i = 0; i < C; ++i) {
    hmm.log_priors[i] = std::log((first_counts[i] + 1) / static_cast<double>(num_utts + C));
    hmm.log_class_freq[i] = std::log((total_counts[i] + 1) / static_cast<double>(grand_total + C));
  }
  hmm.validate();
  return hmm;
}

// Hybrid posterior-to-scaled-likelihood conversion: the DNN posterior is
// divided by the empirical class frequency, in the log domain. This is the
// observation score used by all decoding.
inline Matrix scaled_loglik(const DnnOutput& dnn_out, const HmmParams& hmm) {
  const Matrix& lp = dnn_out.log_posteriors;
  KWS_CHECK(lp.cols() == hmm.num_states, "posterior width does not match state count");
  Matrix out(lp.rows(), lp.cols());
  for (int t = 0; t < lp.rows(); ++t) {
    const double* in = lp.row(t);
    double* o = out.row(t);
    for (int i = 0; i < lp.cols(); ++i) o[i] = in[i] - hmm.log_class_freq[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON parameter file, format_version 1. log_entry may be -inf (serialized
// as null); every other value must be finite.

inline constexpr int kHmmFormatVersion = 1;

inline nlohmann::json hmm_to_json(const HmmParams& hmm) {
  hmm.validate();
  nlohmann::json j;
  j["format_version"] = kHmmFormatVersion;
  j["num_states"] = hmm.num_states;
  j["first_kw"] = hmm.first_kw;
  j["last_kw"] = hmm.last_kw;
  j["log_priors"] = hmm.log_priors;
  j["log_self"] = hmm.log_self;
  j["log_forward"] = hmm.log_forward;
  if (std::isfinite(hmm.log_entry))
    j["log_entry"] = hmm.log_entry;
  else
    j["log_entry"] = nullptr;
  j["log_class_freq"] = hmm.log_class_freq;
  return j;
}

inline HmmParams hmm_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version"))
    throw FormatError("hmm json: missing format_version");
  if (j.at("format_version").get<int>() != kHmmFormatVersion)
    throw FormatError("hmm json: unsupported format_version");
  HmmParams hmm;
  try {
    hmm.num_states = j.at("num_states").get<int>();
    hmm.first_kw = j.at("first_kw").get<int>();
    hmm.last_kw = j.at("last_kw").get<int>();
    hmm.log_priors = j.at("log_priors").get<std::vector<double>>();
    hmm.log_self = j.at("log_self").get<std::vector<double>>();
    hmm.log_forward = j.at("log_forward").get<std::vector<double>>();
    hmm.log_class_freq = j.at("log_class_freq").get<std::vector<double>>();
    const auto& entry = j.at("log_entry");
    hmm.log_entry = entry.is_null() ? kNegInf : entry.get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("hmm json: ") + e.what());
  }
  hmm.validate();
  return hmm;
}

inline void save_hmm_json(const HmmParams& hmm, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << hmm_to_json(hmm).dump(2) << "\n";
  if (!os) throw ValidationError("failed writing hmm json: " + path);
}

inline HmmParams load_hmm_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("hmm json parse error: ") + e.what());
  }
  return hmm_from_json(j);
}

}  // namespace kws
