#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "biped/errors.hpp"

namespace biped {

enum class OptimizerKind { Adam, Sgd };

inline const char* to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  throw InvalidArgument("unknown optimizer '" + s + "'");
}

// Descent step on one parameter block. Adam moments are created lazily on
// the first step.
struct Optimizer {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<double> m;
  std::vector<double> v;

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    if (params.size() != grad.size()) throw DimensionMismatch("Optimizer::step: gradient size");
    if (kind == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
      return;
    }
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
      t = 0;
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

inline double squared_norm(std::span<const double> g) {
  double s = 0.0;
  for (double x : g) s += x * x;
  return s;
}

// Scales all blocks together so their joint norm is at most max_norm.
// Returns the norm before clipping.
inline double clip_global_norm(std::span<double> a, std::span<double> b, double max_norm) {
  double norm = std::sqrt(squared_norm(a) + squared_norm(b));
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (double& x : a) x *= s;
    for (double& x : b) x *= s;
  }
  return norm;
}

}  // namespace biped
