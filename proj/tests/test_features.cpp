// tests/test_features.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "kws/features.hpp"
#include "kws/rng.hpp"
#include "kws/wav.hpp"
#include "oracles.hpp"

using namespace kws;

namespace {

std::vector<double> sine(double freq_hz, double seconds, int rate, double amp = 0.3) {
  std::vector<double> x(static_cast<size_t>(seconds * rate));
  for (size_t n = 0; n < x.size(); ++n)
    x[n] = amp * std::sin(2.0 * M_PI * freq_hz * n / rate);
  return x;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("one second of 16 kHz audio yields 98 frames of 13 coefficients") {
  MfccConfig cfg;
  Matrix m = compute_mfcc(sine(300.0, 1.0, 16000), cfg);
  CHECK(m.rows() == 98);
  CHECK(m.cols() == 13);
}

TEST_CASE("silence maps to the DCT of floored filterbank energies") {
  MfccConfig cfg;
  Matrix m = compute_mfcc(std::vector<double>(16000, 0.0), cfg);
  const double v = std::log(cfg.log_floor);
  // independent expectation: DCT-II of a constant vector
  std::vector<double> expected(cfg.num_ceps, 0.0);
  expected[0] = std::sqrt(1.0 / cfg.num_filters) * cfg.num_filters * v;
  for (int t = 0; t < m.rows(); ++t)
    for (int k = 0; k < m.cols(); ++k)
      CHECK(m(t, k) == Catch::Approx(expected[k]).margin(1e-9));
  // every frame identical
  for (int t = 1; t < m.rows(); ++t)
    for (int k = 0; k < m.cols(); ++k) CHECK(m(t, k) == m(0, k));
}

TEST_CASE("440 Hz sine matches the independent reference MFCC") {
  MfccConfig cfg;
  auto x = sine(440.0, 0.5, 16000);
  Matrix got = compute_mfcc(x, cfg);
  Matrix want = kws::testing::reference_mfcc(x, cfg.sample_rate, cfg.window_samples(),
                                             cfg.hop_samples(), cfg.num_filters,
                                             cfg.num_ceps, cfg.preemphasis, cfg.log_floor);
  REQUIRE(got.rows() == want.rows());
  for (int t = 0; t < got.rows(); ++t)
    for (int k = 0; k < got.cols(); ++k)
      CHECK(got(t, k) == Catch::Approx(want(t, k)).margin(1e-3));
}

TEST_CASE("mfcc is shift-covariant at hop granularity") {
  MfccConfig cfg;
  Rng rng(41);
  std::vector<double> x(16000);
  for (auto& s : x) s = rng.uniform(-0.5, 0.5);
  Matrix a = compute_mfcc(x, cfg);
  Matrix b = compute_mfcc(std::vector<double>(x.begin() + cfg.hop_samples(), x.end()), cfg);
  REQUIRE(b.rows() == a.rows() - 1);
  for (int t = 1; t < b.rows(); ++t)  // frame 0 touches the pre-emphasis boundary
    for (int k = 0; k < 13; ++k)
      CHECK(b(t, k) == Catch::Approx(a(t + 1, k)).margin(1e-9));
}

TEST_CASE("mfcc output is finite for any finite input") {
  MfccConfig cfg;
  Rng rng(7);
  std::vector<double> x(8000);
  for (auto& s : x) s = rng.uniform(-1.0, 1.0) * (rng.uniform() < 0.5 ? 0.0 : 1e4);
  CHECK(compute_mfcc(x, cfg).all_finite());
}

TEST_CASE("mfcc input validation") {
  MfccConfig cfg;
  CHECK_THROWS_AS(compute_mfcc(std::vector<double>(100, 0.0), cfg), ValidationError);
  std::vector<double> bad(1000, 0.0);
  bad[500] = std::nan("");
  CHECK_THROWS_AS(compute_mfcc(bad, cfg), ValidationError);
}

TEST_CASE("stack_context with delta 0 is the identity") {
  Rng rng(3);
  Matrix m(7, 13);
  for (auto& v : m.data()) v = rng.gaussian();
  FrameFeatures f = stack_context(m, 0);
  REQUIRE(f.num_frames() == 7);
  REQUIRE(f.dim() == 13);
  for (int t = 0; t < 7; ++t)
    for (int c = 0; c < 13; ++c) CHECK(f.frames(t, c) == m(t, c));
}

TEST_CASE("stack_context produces the default 247-dim input") {
  Matrix m(100, 13);
  FrameFeatures f = stack_context(m, 9);
  CHECK(f.num_frames() == 100);
  CHECK(f.dim() == 247);
}

TEST_CASE("stack_context edge replication on a single frame") {
  Matrix m(1, 3);
  m(0, 0) = 1.0;
  m(0, 1) = 2.0;
  m(0, 2) = 3.0;
  FrameFeatures f = stack_context(m, 1);
  REQUIRE(f.num_frames() == 1);
  REQUIRE(f.dim() == 9);
  for (int rep = 0; rep < 3; ++rep)
    for (int c = 0; c < 3; ++c) CHECK(f.frames(0, rep * 3 + c) == m(0, c));
}

TEST_CASE("stack_context preserves row count for any delta and length") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    int T = 1 + static_cast<int>(rng.uniform_int(0, 40));
    int d = 1 + static_cast<int>(rng.uniform_int(0, 6));
    int delta = static_cast<int>(rng.uniform_int(0, 12));
    Matrix m(T, d);
    for (auto& v : m.data()) v = rng.gaussian();
    FrameFeatures f = stack_context(m, delta);
    CHECK(f.num_frames() == T);
    CHECK(f.dim() == d * (2 * delta + 1));
    // interior rows are literal concatenations
    for (int t = delta; t < T - delta; ++t)
      for (int k = -delta; k <= delta; ++k)
        for (int c = 0; c < d; ++c)
          CHECK(f.frames(t, (k + delta) * d + c) == m(t + k, c));
  }
}

TEST_CASE("feature file round-trip is exact at f32") {
  Rng rng(19);
  Matrix m(23, 13);
  for (auto& v : m.data()) v = rng.gaussian();
  auto path = temp_file("kws_feat_roundtrip.feat");
  write_features(path.string(), m);
  Matrix back = read_features(path.string());
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (int t = 0; t < m.rows(); ++t)
    for (int c = 0; c < m.cols(); ++c)
      CHECK(back(t, c) == static_cast<double>(static_cast<float>(m(t, c))));
  std::filesystem::remove(path);
}

TEST_CASE("feature file rejects bad magic and version") {
  auto path = temp_file("kws_feat_bad.feat");
  {
    std::ofstream os(path, std::ios::binary);
    os.write("XYZW", 4);
    write_u32(os, 1);
    write_u32(os, 0);
    write_u32(os, 0);
  }
  CHECK_THROWS_AS(read_features(path.string()), FormatError);
  {
    std::ofstream os(path, std::ios::binary);
    os.write("KWSF", 4);
    write_u32(os, 99);
    write_u32(os, 0);
    write_u32(os, 0);
  }
  CHECK_THROWS_AS(read_features(path.string()), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("wav round-trip and sample-rate rejection") {
  AudioBuffer audio;
  audio.sample_rate = 16000;
  Rng rng(5);
  audio.samples.resize(1600);
  for (auto& s : audio.samples) s = static_cast<int16_t>(rng.uniform_int(-3000, 3000));
  auto path = temp_file("kws_test.wav");
  write_wav(path.string(), audio);
  AudioBuffer back = read_wav(path.string());
  REQUIRE(back.samples.size() == audio.samples.size());
  CHECK(back.samples == audio.samples);
  CHECK(back.sample_rate == 16000);

  AudioBuffer wrong_rate = audio;
  wrong_rate.sample_rate = 8000;
  write_wav(path.string(), wrong_rate);
  CHECK_THROWS_AS(read_wav(path.string()), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("wav ingestion feeds the frontend") {
  AudioBuffer audio;
  audio.sample_rate = 16000;
  audio.samples.resize(16000);
  for (size_t n = 0; n < audio.samples.size(); ++n)
    audio.samples[n] = static_cast<int16_t>(9000.0 * std::sin(2.0 * M_PI * 440.0 * n / 16000.0));
  Matrix m = compute_mfcc(audio, MfccConfig{});
  CHECK(m.rows() == 98);
  CHECK(m.all_finite());
}
