// kws/corpus.hpp

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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kws/binio.hpp"
#include "kws/error.hpp"
#include "kws/features.hpp"
#include "kws/parallel.hpp"
#include "kws/rng.hpp"
#include "kws/sampling.hpp"
#include "kws/synth.hpp"

namespace kws {

// ---------------------------------------------------------------------------
// Label file: "KWSL", version u32, then one u16 little-endian per frame.

inline constexpr uint32_t kLabelFileVersion = 1;

inline void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream os = open_out(path);
  os.write("KWSL", 4);
  write_u32(os, kLabelFileVersion);
  for (int s : labels) {
    KWS_CHECK(0 <= s && s <= 0xffff, "label out of u16 range");
    write_u16(os, static_cast<uint16_t>(s));
  }
  if (!os) throw ValidationError("failed writing labels: " + path);
}

inline std::vector<int> read_labels(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, "KWSL", "label file " + path);
  check_version(read_u32(is, "label version"), kLabelFileVersion, "label file");
  std::vector<int> labels;
  for (;;) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    if (is.gcount() == 0) break;
    if (is.gcount() != 2) throw FormatError("odd trailing byte in label file " + path);
    labels.push_back(b[0] | (b[1] << 8));
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Manifest: JSON lines, one utterance per line. Feature/label paths are
// stored relative to the manifest's directory.

struct UtteranceRecord {
  std::string id;
  std::string features_path;  // as stored in the manifest
  std::string labels_path;
  int kw_start_frame = 0;
  int kw_end_frame = 0;
};

inline void write_manifest(const std::vector<UtteranceRecord>& records,
                           const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["id"] = r.id;
    j["features_path"] = r.features_path;
    j["labels_path"] = r.labels_path;
    j["kw_start_frame"] = r.kw_start_frame;
    j["kw_end_frame"] = r.kw_end_frame;
    os << j.dump() << "\n";
  }
  if (!os) throw ValidationError("failed writing manifest: " + path);
}

inline std::vector<UtteranceRecord> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open for reading: " + path);
  std::vector<UtteranceRecord> records;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      UtteranceRecord r;
      r.id = j.at("id").get<std::string>();
      r.features_path = j.at("features_path").get<std::string>();
      r.labels_path = j.at("labels_path").get<std::string>();
      r.kw_start_frame = j.at("kw_start_frame").get<int>();
      r.kw_end_frame = j.at("kw_end_frame").get<int>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("manifest " + path + " line " + std::to_string(lineno) +
                        ": " + e.what());
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// In-memory corpus. Base features stay pre-stacking; context stacking happens
// where the consumer needs it so large stacked matrices are never resident
// for the whole corpus.

struct LabeledUtterance {
  std::string id;
  Matrix base_features;     // T x base_dim
  std::vector<int> labels;  // length T (may be empty for unlabeled data)
  Window keyword;           // half-open ground-truth window
};

inline LabeledUtterance load_utterance(const UtteranceRecord& rec,
                                       const std::filesystem::path& base_dir) {
  LabeledUtterance utt;
  utt.id = rec.id;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base_dir / fp).string();
  };
  utt.base_features = read_features(resolve(rec.features_path));
  utt.labels = read_labels(resolve(rec.labels_path));
  utt.keyword = Window{rec.kw_start_frame, rec.kw_end_frame};
  KWS_CHECK(static_cast<int>(utt.labels.size()) == utt.base_features.rows(),
            "label count does not match frame count for utterance " + rec.id);
  // start == end marks an utterance without a keyword instance
  KWS_CHECK(0 <= utt.keyword.start && utt.keyword.start <= utt.keyword.end &&
                utt.keyword.end <= utt.base_features.rows(),
            "keyword window out of range for utterance " + rec.id);
  return utt;
}

inline std::vector<LabeledUtterance> load_corpus(const std::string& manifest_path,
                                                 int threads = 1) {
  const auto records = read_manifest(manifest_path);
  KWS_CHECK(!records.empty(), "manifest is empty: " + manifest_path);
  const auto base_dir = std::filesystem::path(manifest_path).parent_path();
  std::vector<LabeledUtterance> corpus(records.size());
  parallel_for(static_cast<int>(records.size()), threads,
               [&](int i) { corpus[i] = load_utterance(records[i], base_dir); });
  return corpus;
}

// ---------------------------------------------------------------------------
// Corpus generation: feature + label files plus a manifest, deterministic
// per seed (independent per-utterance streams). The state means depend only
// on the seed, so corpora generated from the same seed at disjoint
// index_offset ranges share one emission model; that is how train and test
// splits are produced.

inline std::string generate_corpus(const SynthConfig& cfg, int n,
                                   const std::string& out_dir, int threads = 1,
                                   int index_offset = 0,
                                   const std::string& manifest_name = "manifest.jsonl") {
  KWS_CHECK(n >= 1, "corpus size must be >= 1");
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  const Matrix means = synth_state_means(cfg);

  std::vector<UtteranceRecord> records(n);
  parallel_for(n, threads, [&](int i) {
    const int index = index_offset + i;
    Rng rng(mix_seed(cfg.seed, 1000003ull * (index + 1)));
    SynthUtterance utt = generate_utterance(cfg, means, rng);
    char name[32];
    std::snprintf(name, sizeof(name), "utt_%05d", index);
    UtteranceRecord rec;
    rec.id = name;
    rec.features_path = std::string(name) + ".feat";
    rec.labels_path = std::string(name) + ".labels";
    rec.kw_start_frame = utt.keyword_window.start;
    rec.kw_end_frame = utt.keyword_window.end;
    write_features((std::filesystem::path(out_dir) / rec.features_path).string(),
                   utt.features);
    write_labels((std::filesystem::path(out_dir) / rec.labels_path).string(),
                 utt.state_labels);
    records[i] = std::move(rec);
  });

  const std::string manifest = (std::filesystem::path(out_dir) / manifest_name).string();
  write_manifest(records, manifest);
  return manifest;
}

}  // namespace kws
