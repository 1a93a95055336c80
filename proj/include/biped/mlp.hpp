#pragma once

// Multilayer perceptron with tanh hidden layers and a linear output layer.
// Parameters live in one flat vector so optimizers and checkpoints can treat
// every network the same way. Layer l stores its weight matrix (out x in,
// row-major) followed by its bias vector.

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "biped/errors.hpp"

namespace biped {

struct MlpParams {
  std::vector<int> layer_sizes;
  std::vector<double> values;

  MlpParams() = default;
  explicit MlpParams(std::vector<int> sizes) : layer_sizes(std::move(sizes)) {
    if (layer_sizes.size() < 2) throw DimensionMismatch("MlpParams: need at least input and output sizes");
    for (int s : layer_sizes)
      if (s <= 0) throw DimensionMismatch("MlpParams: layer sizes must be positive");
    values.assign(count(layer_sizes), 0.0);
  }

  static std::size_t count(const std::vector<int>& sizes) {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
      n += static_cast<std::size_t>(sizes[l + 1]) * (sizes[l] + 1);
    return n;
  }

  std::size_t num_layers() const { return layer_sizes.size() - 1; }
  int in_dim() const { return layer_sizes.front(); }
  int out_dim() const { return layer_sizes.back(); }

  std::size_t weight_offset(std::size_t layer) const {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l)
      off += static_cast<std::size_t>(layer_sizes[l + 1]) * (layer_sizes[l] + 1);
    return off;
  }
  std::size_t bias_offset(std::size_t layer) const {
    return weight_offset(layer) + static_cast<std::size_t>(layer_sizes[layer + 1]) * layer_sizes[layer];
  }

  double& weight(std::size_t layer, int row, int col) {
    return values[weight_offset(layer) + static_cast<std::size_t>(row) * layer_sizes[layer] + col];
  }
  double weight(std::size_t layer, int row, int col) const {
    return values[weight_offset(layer) + static_cast<std::size_t>(row) * layer_sizes[layer] + col];
  }
  double& bias(std::size_t layer, int row) { return values[bias_offset(layer) + row]; }
  double bias(std::size_t layer, int row) const { return values[bias_offset(layer) + row]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// Scaled-uniform (Glorot) weights, zero biases. The last layer is scaled by
// `out_scale` so fresh policies start near their range centre.
inline MlpParams mlp_init(const std::vector<int>& sizes, std::mt19937_64& rng, double out_scale = 1.0) {
  MlpParams p(sizes);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    int in = sizes[l], out = sizes[l + 1];
    double a = std::sqrt(6.0 / (in + out));
    if (l + 1 == p.num_layers()) a *= out_scale;
    std::uniform_real_distribution<double> u(-a, a);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) p.weight(l, r, c) = u(rng);
  }
  return p;
}

// Per-layer activations kept for the backward pass.
struct MlpCache {
  std::vector<std::vector<double>> act;  // act[0] = input, act[L] = output
};

inline void mlp_forward(const MlpParams& p, std::span<const double> input, MlpCache& cache) {
  if (static_cast<int>(input.size()) != p.in_dim())
    throw DimensionMismatch("mlp_forward: input has " + std::to_string(input.size()) + " entries, expected " +
                            std::to_string(p.in_dim()));
  const std::size_t L = p.num_layers();
  cache.act.resize(L + 1);
  cache.act[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < L; ++l) {
    const int in = p.layer_sizes[l], out = p.layer_sizes[l + 1];
    const double* W = p.values.data() + p.weight_offset(l);
    const double* b = p.values.data() + p.bias_offset(l);
    const std::vector<double>& x = cache.act[l];
    std::vector<double>& y = cache.act[l + 1];
    y.resize(out);
    for (int r = 0; r < out; ++r) {
      double acc = b[r];
      const double* row = W + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) acc += row[c] * x[c];
      y[r] = (l + 1 < L) ? std::tanh(acc) : acc;
    }
  }
}

inline std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> input) {
  MlpCache cache;
  mlp_forward(p, input, cache);
  return cache.act.back();
}

// Reverse pass for a cached forward evaluation: adds d(upstream . output)/d(params)
// into `grad` (same layout as p.values) and, if requested, writes the input
// gradient.
inline void mlp_backward(const MlpParams& p, const MlpCache& cache, std::span<const double> upstream,
                         std::span<double> grad, std::vector<double>* grad_input = nullptr) {
  const std::size_t L = p.num_layers();
  if (static_cast<int>(upstream.size()) != p.out_dim()) throw DimensionMismatch("mlp_backward: upstream size");
  if (grad.size() != p.values.size()) throw DimensionMismatch("mlp_backward: gradient buffer size");
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> next;
  for (std::size_t l = L; l-- > 0;) {
    const int in = p.layer_sizes[l], out = p.layer_sizes[l + 1];
    const double* W = p.values.data() + p.weight_offset(l);
    double* gW = grad.data() + p.weight_offset(l);
    double* gb = grad.data() + p.bias_offset(l);
    const std::vector<double>& x = cache.act[l];
    const std::vector<double>& y = cache.act[l + 1];
    if (l + 1 < L)
      for (int r = 0; r < out; ++r) delta[r] *= 1.0 - y[r] * y[r];
    next.assign(in, 0.0);
    for (int r = 0; r < out; ++r) {
      const double d = delta[r];
      gb[r] += d;
      if (d == 0.0) continue;
      double* grow = gW + static_cast<std::size_t>(r) * in;
      const double* wrow = W + static_cast<std::size_t>(r) * in;
      for (int c = 0; c < in; ++c) {
        grow[c] += d * x[c];
        next[c] += d * wrow[c];
      }
    }
    delta.swap(next);
  }
  if (grad_input) *grad_input = delta;
}

struct MlpGradient {
  std::vector<double> params;
  std::vector<double> input;
};

inline MlpGradient mlp_gradient(const MlpParams& p, std::span<const double> input, std::span<const double> upstream) {
  MlpCache cache;
  mlp_forward(p, input, cache);
  MlpGradient g;
  g.params.assign(p.values.size(), 0.0);
  mlp_backward(p, cache, upstream, g.params, &g.input);
  return g;
}

}  // namespace biped
