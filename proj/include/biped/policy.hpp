#pragma once

// Gaussian MLP policies for the two architectures:
//   PureNN      - the network outputs the GRF pair and the foot placement.
//   HeuristicNN - the network outputs pitch/height targets and a foot
//                 placement offset that are fed through the expert's
//                 feedback laws.
// Sampling happens in an unbounded pre-squash space; actions are obtained by
// a tanh squash into each output range. Log-densities are pre-squash.

#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "biped/errors.hpp"
#include "biped/expert.hpp"
#include "biped/mlp.hpp"
#include "biped/sim.hpp"

namespace biped {

enum class PolicyKind { PureNN, HeuristicNN };

inline const char* to_string(PolicyKind k) { return k == PolicyKind::PureNN ? "PureNN" : "HeuristicNN"; }

inline PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "PureNN" || s == "pure" || s == "pure-nn") return PolicyKind::PureNN;
  if (s == "HeuristicNN" || s == "heuristic" || s == "heuristic-nn") return PolicyKind::HeuristicNN;
  throw InvalidArgument("unknown policy kind '" + s + "'");
}

inline constexpr int kObsDim = 6;
inline constexpr int kActionDim = 3;
using Observation = std::array<double, kObsDim>;

inline constexpr Observation kObsScale{1.0, 1.0, 1.0, 1.0, 0.5, 2.0};

// CoM x relative to the support foot, then (v_act, z, dz, pitch, pitch_rate),
// each divided by kObsScale.
inline Observation make_observation(const RobotState& s) {
  const LegState& st = s.support_leg();
  double foot_x = st.in_contact ? st.pinned_x : st.foot_x;
  Observation o{s.x - foot_x, s.dx, s.z, s.dz, s.pitch, s.pitch_rate};
  for (int i = 0; i < kObsDim; ++i) o[i] /= kObsScale[i];
  return o;
}

struct OutputRange {
  double low;
  double high;
  double center() const { return 0.5 * (low + high); }
  double half() const { return 0.5 * (high - low); }
  friend bool operator==(const OutputRange&, const OutputRange&) = default;
};

inline std::vector<OutputRange> default_ranges(PolicyKind kind) {
  if (kind == PolicyKind::PureNN) return {{-300.0, 300.0}, {0.0, 1500.0}, {-0.6, 0.6}};
  // Offsets about the embedded expert targets (theta_des, z_des, 0).
  return {{-0.3, 0.3}, {-0.15, 0.15}, {-0.2, 0.2}};
}

struct GaussianMlpPolicy {
  PolicyKind kind = PolicyKind::PureNN;
  MlpParams mean_net;
  std::vector<double> log_std;
  std::vector<OutputRange> output_ranges;
  // Feedback law used by HeuristicNN; carried for PureNN only as metadata.
  GainSet gains;

  int action_dim() const { return mean_net.out_dim(); }
  friend bool operator==(const GaussianMlpPolicy&, const GaussianMlpPolicy&) = default;
};

// V(s) = scale * net(s); the scale lets a unit-sized network represent
// returns in the thousands.
struct ValueNet {
  MlpParams net;
  double scale = 1.0;
  friend bool operator==(const ValueNet&, const ValueNet&) = default;
};

inline void validate(const GaussianMlpPolicy& p) {
  if (p.mean_net.in_dim() != kObsDim) throw DimensionMismatch("policy input must have 6 entries");
  if (p.mean_net.out_dim() != kActionDim) throw DimensionMismatch("policy output must have 3 entries");
  if (static_cast<int>(p.log_std.size()) != p.action_dim()) throw DimensionMismatch("log_std size");
  if (static_cast<int>(p.output_ranges.size()) != p.action_dim()) throw DimensionMismatch("output_ranges size");
  for (const auto& r : p.output_ranges)
    if (!(r.low < r.high)) throw InvariantViolation("output_ranges", "low must be below high");
  for (double v : p.log_std)
    if (!std::isfinite(v)) throw InvariantViolation("log_std", "must be finite");
  if (!p.mean_net.all_finite()) throw InvariantViolation("mean_net", "non-finite parameter");
}

struct PolicyInit {
  std::vector<int> hidden{64, 64};
  double log_std = -1.0;
  // Scale of the last-layer initialisation; zero starts exactly at the range
  // centres (for HeuristicNN: the expert's own targets).
  double out_scale = 0.01;
};

inline GaussianMlpPolicy make_policy(PolicyKind kind, const GainSet& gains, std::mt19937_64& rng,
                                     const PolicyInit& init = {}) {
  std::vector<int> sizes{kObsDim};
  sizes.insert(sizes.end(), init.hidden.begin(), init.hidden.end());
  sizes.push_back(kActionDim);
  GaussianMlpPolicy p;
  p.kind = kind;
  p.mean_net = mlp_init(sizes, rng, init.out_scale);
  p.log_std.assign(kActionDim, init.log_std);
  p.output_ranges = default_ranges(kind);
  p.gains = gains;
  return p;
}

inline ValueNet make_value_net(std::mt19937_64& rng, const std::vector<int>& hidden = {64, 64}, double scale = 1.0) {
  std::vector<int> sizes{kObsDim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return {mlp_init(sizes, rng, 1.0), scale};
}

inline double value_of(const ValueNet& v, const Observation& obs) { return v.scale * mlp_forward(v.net, obs)[0]; }

// ---------------------------------------------------------------------------
// Gaussian density

inline double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                               std::span<const double> x) {
  if (mean.size() != x.size() || log_std.size() != x.size())
    throw DimensionMismatch("gaussian_logprob: dimension mismatch");
  double lp = -0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = (x[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i];
  }
  return lp;
}

inline double policy_logprob(const GaussianMlpPolicy& p, const Observation& obs,
                             std::span<const double> pre_squash) {
  if (static_cast<int>(pre_squash.size()) != p.action_dim())
    throw DimensionMismatch("policy_logprob: action has " + std::to_string(pre_squash.size()) + " entries");
  std::vector<double> mean = mlp_forward(p.mean_net, obs);
  return gaussian_logprob(mean, p.log_std, pre_squash);
}

inline double squash(double u, const OutputRange& r) { return r.center() + r.half() * std::tanh(u); }

// Inverse of squash, with the normalized value clipped to +-0.999.
inline double unsquash(double a, const OutputRange& r) {
  double y = (a - r.center()) / r.half();
  y = detail::clamp(y, -0.999, 0.999);
  return std::atanh(y);
}

struct PolicySample {
  std::array<double, kActionDim> action{};
  std::array<double, kActionDim> pre_squash{};
  double logprob = 0.0;
};

inline PolicySample squash_sample(const GaussianMlpPolicy& p, std::span<const double> mean,
                                  std::span<const double> pre) {
  PolicySample s;
  for (int i = 0; i < kActionDim; ++i) {
    s.pre_squash[i] = pre[i];
    s.action[i] = squash(pre[i], p.output_ranges[i]);
  }
  s.logprob = gaussian_logprob(mean, p.log_std, s.pre_squash);
  return s;
}

inline PolicySample policy_sample(const GaussianMlpPolicy& p, const Observation& obs, std::mt19937_64& rng) {
  std::vector<double> mean = mlp_forward(p.mean_net, obs);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, kActionDim> pre{};
  for (int i = 0; i < kActionDim; ++i) pre[i] = mean[i] + std::exp(p.log_std[i]) * normal(rng);
  return squash_sample(p, mean, pre);
}

// Noise-free action at the network mean.
inline PolicySample policy_mean(const GaussianMlpPolicy& p, const Observation& obs) {
  std::vector<double> mean = mlp_forward(p.mean_net, obs);
  return squash_sample(p, mean, mean);
}

// ---------------------------------------------------------------------------
// Architectures

inline Action pure_nn_decode(std::span<const double> squashed) { return {squashed[0], squashed[1], squashed[2]}; }

// Network targets (theta_NN, z_NN, x_NN) through the expert's feedback laws.
inline Action heuristic_decode(std::span<const double> squashed, const RobotState& s, const GainSet& g) {
  double theta_nn = g.theta_des + squashed[0];
  double z_nn = g.z_des + squashed[1];
  double x_nn = squashed[2];
  Action a;
  a.F_x = g.K_pt * (theta_nn - s.pitch) + g.K_dt * (-s.pitch_rate);
  a.F_z = g.K_pz * (z_nn - s.z) + g.K_dz * (-s.dz);
  a.x_p = g.k * (s.dx - g.v_tgt) + 0.5 * s.dx * g.T + x_nn;
  return a;
}

inline Action decode_action(const GaussianMlpPolicy& p, std::span<const double> squashed, const RobotState& s) {
  return p.kind == PolicyKind::PureNN ? pure_nn_decode(squashed) : heuristic_decode(squashed, s, p.gains);
}

inline Action pure_nn_action(const GaussianMlpPolicy& p, const Observation& obs, std::mt19937_64& rng) {
  if (p.kind != PolicyKind::PureNN) throw KindMismatch("pure_nn_action needs a PureNN policy");
  return pure_nn_decode(policy_sample(p, obs, rng).action);
}

inline Action heuristic_nn_action(const GaussianMlpPolicy& p, const Observation& obs, const RobotState& s,
                                  const GainSet& g, std::mt19937_64& rng) {
  if (p.kind != PolicyKind::HeuristicNN) throw KindMismatch("heuristic_nn_action needs a HeuristicNN policy");
  return heuristic_decode(policy_sample(p, obs, rng).action, s, g);
}

inline Action heuristic_nn_action(const GaussianMlpPolicy& p, const Observation& obs, const RobotState& s,
                                  std::mt19937_64& rng) {
  return heuristic_nn_action(p, obs, s, p.gains, rng);
}

}  // namespace biped
