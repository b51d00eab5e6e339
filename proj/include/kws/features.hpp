// kws/features.hpp

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
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "kws/binio.hpp"
#include "kws/error.hpp"
#include "kws/matrix.hpp"
#include "kws/wav.hpp"

namespace kws {

// MFCC frontend definition. The exact recipe, so that an independent
// implementation can reproduce it:
//   1. scale int16 samples to [-1, 1) by dividing by 32768
//   2. pre-emphasis y[n] = x[n] - k*x[n-1] over the whole signal, x[-1] = x[0]
//   3. frames of window_ms every hop_ms, symmetric Hann window
//   4. power spectrum |FFT_512|^2 (bins 0..256)
//   5. num_filters triangular filters, HTK mel scale 2595*log10(1 + f/700),
//      edges equally spaced in mel between 0 Hz and Nyquist, weights evaluated
//      at bin center frequencies
//   6. log(max(energy, log_floor))
//   7. orthonormal DCT-II, keep num_ceps coefficients
struct MfccConfig {
  int sample_rate = 16000;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int num_filters = 40;
  int num_ceps = 13;
  double preemphasis = 0.97;
  double log_floor = 1e-10;
  bool cepstral_mean_norm = false;  // per-utterance mean subtraction

  int window_samples() const {
    return static_cast<int>(std::lround(sample_rate * window_ms / 1000.0));
  }
  int hop_samples() const {
    return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
  }
};

// Per-frame feature matrix, possibly context-stacked.
struct FrameFeatures {
  Matrix frames;          // T x dim
  double frame_hop = 0.010;  // seconds between rows

  int num_frames() const { return frames.rows(); }
  int dim() const { return frames.cols(); }
};

namespace detail {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 FFT; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * M_PI / static_cast<double>(len);
    std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// filterbank(m, bin) weights, m in [0, num_filters), bin in [0, nfft/2].
inline Matrix mel_filterbank(const MfccConfig& cfg, int nfft) {
  const int nbins = nfft / 2 + 1;
  const double nyquist = cfg.sample_rate / 2.0;
  std::vector<double> edges(cfg.num_filters + 2);
  const double mel_hi = hz_to_mel(nyquist);
  for (int i = 0; i < cfg.num_filters + 2; ++i)
    edges[i] = mel_to_hz(mel_hi * i / (cfg.num_filters + 1));
  Matrix fb(cfg.num_filters, nbins);
  for (int m = 0; m < cfg.num_filters; ++m) {
    double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < nbins; ++b) {
      double f = static_cast<double>(b) * cfg.sample_rate / nfft;
      double w = 0.0;
      if (f >= lo && f <= mid && mid > lo) w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi && hi > mid) w = (hi - f) / (hi - mid);
      fb(m, b) = w;
    }
  }
  return fb;
}

}  // namespace detail

// Raw-sample entry point (samples already in real units). Deterministic.
inline Matrix compute_mfcc(const std::vector<double>& samples, const MfccConfig& config) {
  const int win = config.window_samples();
  const int hop = config.hop_samples();
  KWS_CHECK(config.sample_rate > 0, "sample_rate must be positive");
  KWS_CHECK(config.num_filters >= config.num_ceps,
            "mel filter count must be >= number of cepstra");
  if (static_cast<int>(samples.size()) < win)
    throw ValidationError("audio shorter than one analysis window");
  for (double s : samples)
    if (!std::isfinite(s)) throw ValidationError("non-finite audio sample");

  const int num_frames = (static_cast<int>(samples.size()) - win) / hop + 1;
  const int nfft = detail::next_pow2(win);
  const int nbins = nfft / 2 + 1;

  // pre-emphasis over the whole signal
  std::vector<double> emph(samples.size());
  emph[0] = samples[0] - config.preemphasis * samples[0];
  for (size_t n = 1; n < samples.size(); ++n)
    emph[n] = samples[n] - config.preemphasis * samples[n - 1];

  std::vector<double> hann(win);
  for (int n = 0; n < win; ++n)
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / (win - 1));

  const Matrix fb = detail::mel_filterbank(config, nfft);

  Matrix out(num_frames, config.num_ceps);
  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> power(nbins), logmel(config.num_filters);
  for (int t = 0; t < num_frames; ++t) {
    const int off = t * hop;
    for (int n = 0; n < win; ++n) buf[n] = emph[off + n] * hann[n];
    for (int n = win; n < nfft; ++n) buf[n] = 0.0;
    detail::fft_radix2(buf);
    for (int b = 0; b < nbins; ++b) power[b] = std::norm(buf[b]);
    for (int m = 0; m < config.num_filters; ++m) {
      double e = 0.0;
      for (int b = 0; b < nbins; ++b) e += fb(m, b) * power[b];
      logmel[m] = std::log(std::max(e, config.log_floor));
    }
    // orthonormal DCT-II
    for (int k = 0; k < config.num_ceps; ++k) {
      double s = 0.0;
      for (int m = 0; m < config.num_filters; ++m)
        s += logmel[m] * std::cos(M_PI * k * (2.0 * m + 1.0) / (2.0 * config.num_filters));
      double scale = (k == 0) ? std::sqrt(1.0 / config.num_filters)
                              : std::sqrt(2.0 / config.num_filters);
      out(t, k) = scale * s;
    }
  }

  if (config.cepstral_mean_norm && num_frames > 0) {
    for (int k = 0; k < config.num_ceps; ++k) {
      double mean = 0.0;
      for (int t = 0; t < num_frames; ++t) mean += out(t, k);
      mean /= num_frames;
      for (int t = 0; t < num_frames; ++t) out(t, k) -= mean;
    }
  }
  return out;
}

inline Matrix compute_mfcc(const AudioBuffer& audio, const MfccConfig& config) {
  KWS_CHECK(audio.sample_rate == config.sample_rate,
            "audio sample rate does not match config");
  std::vector<double> samples(audio.samples.size());
  for (size_t i = 0; i < samples.size(); ++i) samples[i] = audio.samples[i] / 32768.0;
  return compute_mfcc(samples, config);
}

// Concatenates rows [t-delta, t+delta] into one row per frame; rows outside
// the matrix are replaced by the first/last row. Output is T x d*(2*delta+1).
inline FrameFeatures stack_context(const Matrix& mfcc, int delta, double frame_hop = 0.010) {
  KWS_CHECK(delta >= 0, "context delta must be >= 0");
  KWS_CHECK(mfcc.rows() >= 1, "cannot stack context over an empty feature matrix");
  const int T = mfcc.rows(), d = mfcc.cols();
  FrameFeatures out;
  out.frame_hop = frame_hop;
  out.frames = Matrix(T, d * (2 * delta + 1));
  for (int t = 0; t < T; ++t) {
    for (int k = -delta; k <= delta; ++k) {
      int src = std::min(std::max(t + k, 0), T - 1);
      const double* in_row = mfcc.row(src);
      double* out_row = out.frames.row(t) + static_cast<size_t>(k + delta) * d;
      for (int c = 0; c < d; ++c) out_row[c] = in_row[c];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature dump format: "KWSF", version u32, T u32, d u32, then T*d f32
// little-endian row-major.

inline constexpr uint32_t kFeatureFileVersion = 1;

inline void write_features(const std::string& path, const Matrix& feats) {
  std::ofstream os = open_out(path);
  os.write("KWSF", 4);
  write_u32(os, kFeatureFileVersion);
  write_u32(os, static_cast<uint32_t>(feats.rows()));
  write_u32(os, static_cast<uint32_t>(feats.cols()));
  for (int t = 0; t < feats.rows(); ++t)
    for (int c = 0; c < feats.cols(); ++c)
      write_f32(os, static_cast<float>(feats(t, c)));
  if (!os) throw ValidationError("failed writing features: " + path);
}

inline Matrix read_features(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, "KWSF", "feature file " + path);
  check_version(read_u32(is, "feature version"), kFeatureFileVersion, "feature file");
  uint32_t T = read_u32(is, "frame count");
  uint32_t d = read_u32(is, "feature dim");
  Matrix m(static_cast<int>(T), static_cast<int>(d));
  for (uint32_t t = 0; t < T; ++t)
    for (uint32_t c = 0; c < d; ++c)
      m(static_cast<int>(t), static_cast<int>(c)) = read_f32(is, "feature value");
  return m;
}

}  // namespace kws
