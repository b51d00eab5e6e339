// tools/kws_main.cpp

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

// Batch experiment driver. Subcommands: gen-data, estimate-hmm, train-ce,
// train-e2e, eval, decode. All outputs go to an explicit --out directory;
// inputs are never mutated; progress goes to stderr, artifacts to files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "kws/config.hpp"
#include "kws/corpus.hpp"
#include "kws/decoder.hpp"
#include "kws/dnn.hpp"
#include "kws/eval.hpp"
#include "kws/hmm.hpp"
#include "kws/trainer.hpp"

namespace fs = std::filesystem;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path))
    throw kws::ValidationError(what + " not found: " + path);
}

kws::AppConfig resolve_config(const std::string& config_path, bool seed_set,
                              uint64_t seed, bool threads_set, int threads,
                              bool epochs_set, int epochs, bool lr_set, double lr,
                              bool is_e2e_phase) {
  kws::AppConfig cfg;
  if (!config_path.empty()) {
    require_file(config_path, "config file");
    cfg = kws::load_config(config_path);
  }
  if (seed_set) cfg.seed = seed;
  if (threads_set) cfg.threads = threads;
  kws::TrainConfig& phase = is_e2e_phase ? cfg.train_e2e : cfg.train_ce;
  if (epochs_set) phase.epochs = epochs;
  if (lr_set) phase.learning_rate = lr;
  cfg.finalize();
  return cfg;
}

void echo_config(const kws::AppConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  kws::save_config(cfg, (fs::path(out_dir) / "config_resolved.json").string());
}

std::vector<std::vector<int>> corpus_labels(const std::vector<kws::LabeledUtterance>& corpus) {
  std::vector<std::vector<int>> labels;
  labels.reserve(corpus.size());
  for (const auto& utt : corpus) labels.push_back(utt.labels);
  return labels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trainable keyword-spotting toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, manifest_path, hmm_path, ckpt_path, init_path;
  uint64_t seed = 0;
  int threads = 1, epochs = 0, num_utts = 0;
  double lr = 0.0;
  double decode_threshold = -std::numeric_limits<double>::infinity();

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "RNG seed override");
    sub->add_option("--threads", threads, "worker threads (1 = bit-deterministic)");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic labeled corpus");
  add_common(gen);
  gen->add_option("--num", num_utts, "number of utterances override");
  int num_test_utts = 0;
  gen->add_option("--test-num", num_test_utts,
                  "also write manifest_test.jsonl with this many held-out utterances");

  CLI::App* est = app.add_subcommand("estimate-hmm", "estimate HMM parameters from labels");
  add_common(est);
  est->add_option("--manifest", manifest_path, "training manifest")->required();

  CLI::App* tce = app.add_subcommand("train-ce", "cross-entropy pretraining");
  add_common(tce);
  tce->add_option("--manifest", manifest_path, "training manifest")->required();
  tce->add_option("--epochs", epochs, "epoch count override");
  tce->add_option("--lr", lr, "learning rate override");

  CLI::App* te2 = app.add_subcommand("train-e2e", "end-to-end fine-tuning");
  add_common(te2);
  te2->add_option("--manifest", manifest_path, "training manifest")->required();
  te2->add_option("--hmm", hmm_path, "HMM parameter json")->required();
  te2->add_option("--init", init_path, "initial checkpoint (from train-ce)")->required();
  te2->add_option("--epochs", epochs, "epoch count override");
  te2->add_option("--lr", lr, "learning rate override");

  CLI::App* ev = app.add_subcommand("eval", "detection evaluation on a labeled test set");
  add_common(ev);
  ev->add_option("--manifest", manifest_path, "test manifest")->required();
  ev->add_option("--hmm", hmm_path, "HMM parameter json")->required();
  ev->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();

  CLI::App* dec = app.add_subcommand("decode", "emit per-utterance detections as CSV");
  add_common(dec);
  dec->add_option("--manifest", manifest_path, "input manifest")->required();
  dec->add_option("--hmm", hmm_path, "HMM parameter json")->required();
  dec->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  dec->add_option("--threshold", decode_threshold, "drop detections below this score");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    const bool is_e2e = te2->parsed();
    kws::AppConfig cfg = resolve_config(
        config_path, gen->count("--seed") || est->count("--seed") ||
                         tce->count("--seed") || te2->count("--seed") ||
                         ev->count("--seed") || dec->count("--seed"),
        seed,
        gen->count("--threads") || est->count("--threads") || tce->count("--threads") ||
            te2->count("--threads") || ev->count("--threads") || dec->count("--threads"),
        threads, tce->count("--epochs") || te2->count("--epochs"), epochs,
        tce->count("--lr") || te2->count("--lr"), lr, is_e2e);

    if (gen->parsed()) {
      if (gen->count("--num")) cfg.num_utterances = num_utts;
      if (gen->count("--test-num")) cfg.num_test_utterances = num_test_utts;
      echo_config(cfg, out_dir);
      std::cerr << "generating " << cfg.num_utterances << " utterances into " << out_dir
                << "\n";
      const std::string manifest =
          kws::generate_corpus(cfg.synth, cfg.num_utterances, out_dir, cfg.threads);
      std::cerr << "wrote " << manifest << "\n";
      if (cfg.num_test_utterances > 0) {
        const std::string test_manifest = kws::generate_corpus(
            cfg.synth, cfg.num_test_utterances, out_dir, cfg.threads,
            cfg.num_utterances, "manifest_test.jsonl");
        std::cerr << "wrote " << test_manifest << "\n";
      }
    } else if (est->parsed()) {
      require_file(manifest_path, "manifest");
      echo_config(cfg, out_dir);
      auto corpus = kws::load_corpus(manifest_path, cfg.threads);
      kws::HmmParams hmm = kws::estimate_hmm(corpus_labels(corpus), cfg.hmm_num_states,
                                             cfg.hmm_first_kw, cfg.hmm_last_kw);
      const std::string path = (fs::path(out_dir) / "hmm.json").string();
      kws::save_hmm_json(hmm, path);
      std::cerr << "wrote " << path << "\n";
    } else if (tce->parsed()) {
      require_file(manifest_path, "manifest");
      echo_config(cfg, out_dir);
      auto corpus = kws::load_corpus(manifest_path, cfg.threads);
      kws::TrainLog log((fs::path(out_dir) / "train_ce.csv").string());
      std::cerr << "cross-entropy pretraining: " << corpus.size() << " utterances, "
                << cfg.train_ce.epochs << " epochs\n";
      kws::CeResult res = kws::pretrain_ce(corpus, cfg.train_ce, &log);
      for (size_t e = 0; e < res.epoch_losses.size(); ++e)
        std::cerr << "  epoch " << e << " mean ce " << res.epoch_losses[e] << "\n";
      const std::string path = (fs::path(out_dir) / "ce.ckpt").string();
      kws::save_checkpoint(res.params, path);
      std::cerr << "wrote " << path << "\n";
    } else if (te2->parsed()) {
      require_file(manifest_path, "manifest");
      require_file(hmm_path, "hmm file");
      require_file(init_path, "initial checkpoint");
      echo_config(cfg, out_dir);
      auto corpus = kws::load_corpus(manifest_path, cfg.threads);
      kws::HmmParams hmm = kws::load_hmm_json(hmm_path);
      kws::DnnParams init = kws::load_checkpoint(init_path);
      kws::TrainLog log((fs::path(out_dir) / "train_e2e.csv").string());
      std::cerr << "end-to-end fine-tuning: " << corpus.size() << " utterances, "
                << cfg.train_e2e.epochs << " epochs\n";
      kws::E2eResult res = kws::train_e2e(corpus, init, hmm, cfg.train_e2e, &log);
      if (res.skipped_windows > 0)
        std::cerr << "skipped " << res.skipped_windows << " infeasible windows\n";
      const std::string path = (fs::path(out_dir) / "e2e.ckpt").string();
      kws::save_checkpoint(res.params, path);
      std::cerr << "wrote " << path << "\n";
    } else if (ev->parsed()) {
      require_file(manifest_path, "manifest");
      require_file(hmm_path, "hmm file");
      require_file(ckpt_path, "checkpoint");
      echo_config(cfg, out_dir);
      auto corpus = kws::load_corpus(manifest_path, cfg.threads);
      kws::HmmParams hmm = kws::load_hmm_json(hmm_path);
      kws::DnnParams params = kws::load_checkpoint(ckpt_path);
      kws::EvalReport report = kws::evaluate(params, hmm, corpus, cfg.eval);
      kws::write_det_csv(report.det_points, (fs::path(out_dir) / "det_points.csv").string());
      kws::write_summary_json(report, (fs::path(out_dir) / "summary.json").string());
      if (!report.confusion.empty())
        kws::write_confusion_csv(report.confusion,
                                 (fs::path(out_dir) / "confusion.csv").string());
      std::cerr << "frr at " << report.operating_fa_per_hour
                << " fa/hr: " << report.frr_at_operating_fa
                << " (state accuracy " << report.state_accuracy << ")\n";
    } else if (dec->parsed()) {
      require_file(manifest_path, "manifest");
      require_file(hmm_path, "hmm file");
      require_file(ckpt_path, "checkpoint");
      echo_config(cfg, out_dir);
      auto corpus = kws::load_corpus(manifest_path, cfg.threads);
      kws::HmmParams hmm = kws::load_hmm_json(hmm_path);
      kws::DnnParams params = kws::load_checkpoint(ckpt_path);
      auto dets =
          kws::decode_corpus(params, hmm, corpus, cfg.eval.context_delta, cfg.threads);
      std::vector<kws::ScoredDetection> kept;
      for (const auto& d : dets)
        if (d.score >= decode_threshold) kept.push_back(d);
      kept = kws::nms(std::move(kept), cfg.eval.nms_gap_frames);
      std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.utt_index != b.utt_index) return a.utt_index < b.utt_index;
        return a.end_frame < b.end_frame;
      });
      const std::string path = (fs::path(out_dir) / "detections.csv").string();
      std::ofstream os(path);
      if (!os) throw kws::ValidationError("cannot open for writing: " + path);
      os << "utterance_id,score,start_frame,end_frame\n";
      os.precision(17);
      for (const auto& d : kept)
        os << corpus[d.utt_index].id << ',' << d.score << ',' << d.start_frame << ','
           << d.end_frame << '\n';
      std::cerr << "wrote " << path << " (" << kept.size() << " detections)\n";
    }
  } catch (const kws::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
