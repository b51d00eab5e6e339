// kws/dnn.hpp

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

#include "kws/binio.hpp"
#include "kws/error.hpp"
#include "kws/matrix.hpp"
#include "kws/rng.hpp"

namespace kws {

// Fully-connected state classifier. Hidden layers use ReLU, the output layer
// is a row-wise log-softmax over the HMM state classes. Weight matrices are
// stored (out x in); layer l maps layer_sizes[l] -> layer_sizes[l+1].
struct DnnParams {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return layer_sizes.front(); }
  int num_classes() const { return layer_sizes.back(); }

  int64_t param_count() const {
    int64_t n = 0;
    for (size_t l = 0; l + 1 < layer_sizes.size(); ++l)
      n += static_cast<int64_t>(layer_sizes[l]) * layer_sizes[l + 1] + layer_sizes[l + 1];
    return n;
  }
};

struct DnnOutput {
  Matrix log_posteriors;  // T x C, each row log-sum-exps to 0
};

struct DnnGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

// Glorot-uniform weights, zero biases. Deterministic per seed.
inline DnnParams init_params(const std::vector<int>& layer_sizes, uint64_t seed) {
  KWS_CHECK(layer_sizes.size() >= 2, "network needs at least input and output sizes");
  for (int s : layer_sizes) KWS_CHECK(s >= 1, "layer sizes must be positive");
  DnnParams p;
  p.layer_sizes = layer_sizes;
  Rng rng(mix_seed(seed, 0x6e6e6574));
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    int in = layer_sizes[l], out = layer_sizes[l + 1];
    double limit = std::sqrt(6.0 / (in + out));
    Matrix w(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = rng.uniform(-limit, limit);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(out, 0.0);
  }
  return p;
}

namespace detail {

// Forward pass keeping every pre-activation and activation, shared between
// forward() and backward().
struct ForwardCache {
  std::vector<Matrix> activations;  // a_0 = input, ..., a_L = log-softmax output
  std::vector<Matrix> pre_acts;     // z_1..z_L
};

inline ForwardCache run_forward(const DnnParams& p, const Matrix& feats) {
  KWS_CHECK(feats.cols() == p.input_dim(), "feature dim does not match network input");
  ForwardCache cache;
  cache.activations.push_back(feats);
  for (int l = 0; l < p.num_layers(); ++l) {
    Matrix z = matmul_nt(cache.activations.back(), p.weights[l]);
    const std::vector<double>& b = p.biases[l];
    for (int t = 0; t < z.rows(); ++t) {
      double* zr = z.row(t);
      for (int j = 0; j < z.cols(); ++j) zr[j] += b[j];
    }
    cache.pre_acts.push_back(z);
    if (l + 1 < p.num_layers()) {
      Matrix a = z;
      for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
      cache.activations.push_back(std::move(a));
    } else {
      // row-wise log-softmax
      Matrix a = z;
      for (int t = 0; t < a.rows(); ++t) {
        double* r = a.row(t);
        double mx = r[0];
        for (int j = 1; j < a.cols(); ++j) mx = std::max(mx, r[j]);
        double sum = 0.0;
        for (int j = 0; j < a.cols(); ++j) sum += std::exp(r[j] - mx);
        double lse = mx + std::log(sum);
        for (int j = 0; j < a.cols(); ++j) r[j] -= lse;
      }
      cache.activations.push_back(std::move(a));
    }
  }
  return cache;
}

}  // namespace detail

inline DnnOutput forward(const DnnParams& params, const Matrix& feats) {
  detail::ForwardCache cache = detail::run_forward(params, feats);
  return DnnOutput{std::move(cache.activations.back())};
}

// Reverse-mode pass: given dL/d(log_posteriors), returns dL/d(theta).
// Linear in grad_log_post; ReLU subgradient at 0 is 0.
inline DnnGrads backward(const DnnParams& params, const Matrix& feats,
                         const Matrix& grad_log_post) {
  detail::ForwardCache cache = detail::run_forward(params, feats);
  const Matrix& log_post = cache.activations.back();
  KWS_CHECK(grad_log_post.rows() == log_post.rows() &&
                grad_log_post.cols() == log_post.cols(),
            "gradient shape does not match forward output");

  const int L = params.num_layers();
  DnnGrads grads;
  grads.weights.resize(L);
  grads.biases.resize(L);

  // log-softmax backward: dz = g - softmax * rowsum(g)
  Matrix dz(grad_log_post.rows(), grad_log_post.cols());
  for (int t = 0; t < dz.rows(); ++t) {
    const double* g = grad_log_post.row(t);
    const double* lp = log_post.row(t);
    double gsum = 0.0;
    for (int j = 0; j < dz.cols(); ++j) gsum += g[j];
    double* d = dz.row(t);
    for (int j = 0; j < dz.cols(); ++j) d[j] = g[j] - std::exp(lp[j]) * gsum;
  }

  for (int l = L - 1; l >= 0; --l) {
    const Matrix& a_prev = cache.activations[l];
    grads.weights[l] = matmul_tn(dz, a_prev);
    std::vector<double> db(dz.cols(), 0.0);
    for (int t = 0; t < dz.rows(); ++t) {
      const double* d = dz.row(t);
      for (int j = 0; j < dz.cols(); ++j) db[j] += d[j];
    }
    grads.biases[l] = std::move(db);
    if (l > 0) {
      Matrix da = matmul(dz, params.weights[l]);  // T x in
      const Matrix& z_prev = cache.pre_acts[l - 1];
      for (int t = 0; t < da.rows(); ++t) {
        double* dr = da.row(t);
        const double* zr = z_prev.row(t);
        for (int j = 0; j < da.cols(); ++j)
          if (zr[j] <= 0.0) dr[j] = 0.0;
      }
      dz = std::move(da);
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Checkpoint format: "KWSE", version u32, layer count u32, layer sizes u32
// each, then per layer weights row-major f32 and biases f32, little-endian.
// The f32 narrowing happens only here; a save/load round trip is bit-exact
// at f32.

inline constexpr uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const DnnParams& params, const std::string& path) {
  std::ofstream os = open_out(path);
  os.write("KWSE", 4);
  write_u32(os, kCheckpointVersion);
  write_u32(os, static_cast<uint32_t>(params.layer_sizes.size()));
  for (int s : params.layer_sizes) write_u32(os, static_cast<uint32_t>(s));
  for (int l = 0; l < params.num_layers(); ++l) {
    const Matrix& w = params.weights[l];
    for (int i = 0; i < w.rows(); ++i)
      for (int j = 0; j < w.cols(); ++j) write_f32(os, static_cast<float>(w(i, j)));
    for (double b : params.biases[l]) write_f32(os, static_cast<float>(b));
  }
  if (!os) throw ValidationError("failed writing checkpoint: " + path);
}

inline DnnParams load_checkpoint(const std::string& path) {
  std::ifstream is = open_in(path);
  check_magic(is, "KWSE", "checkpoint " + path);
  check_version(read_u32(is, "checkpoint version"), kCheckpointVersion, "checkpoint");
  uint32_t n_sizes = read_u32(is, "layer count");
  if (n_sizes < 2 || n_sizes > 64)
    throw FormatError("implausible layer count in checkpoint: " + std::to_string(n_sizes));
  DnnParams p;
  p.layer_sizes.resize(n_sizes);
  for (uint32_t i = 0; i < n_sizes; ++i) {
    p.layer_sizes[i] = static_cast<int>(read_u32(is, "layer size"));
    if (p.layer_sizes[i] <= 0) throw FormatError("non-positive layer size in checkpoint");
  }
  for (uint32_t l = 0; l + 1 < n_sizes; ++l) {
    int in = p.layer_sizes[l], out = p.layer_sizes[l + 1];
    Matrix w(out, in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) w(i, j) = read_f32(is, "weight");
    std::vector<double> b(out);
    for (int i = 0; i < out; ++i) b[i] = read_f32(is, "bias");
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

}  // namespace kws
