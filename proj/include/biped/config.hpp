#pragma once

// Experiment configuration in an INI-like text form:
//
//   # comment
//   [section]
//   key = value
//
// Every key has a default, absent sections keep their defaults, and unknown
// sections or keys are rejected. Lists are whitespace separated.

#include <array>
#include <charconv>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "biped/env.hpp"
#include "biped/errors.hpp"
#include "biped/expert.hpp"
#include "biped/learning.hpp"
#include "biped/policy.hpp"
#include "biped/reward.hpp"
#include "biped/sim.hpp"
#include "biped/transfer.hpp"

namespace biped {

struct PolicyConfig {
  PolicyKind kind = PolicyKind::HeuristicNN;
  std::vector<int> hidden{64, 64};
  // Empty means the kind's default ranges.
  std::vector<OutputRange> ranges;
  double log_std = -1.0;
  double out_scale = 0.01;
  friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int iterations = 150;
  int episodes = 10;
  std::string out_dir = "out";
  bool rough = true;
  InitMode init_mode = InitMode::UnloadedDrop;
  double min_stance_time = 0.05;
  int bc_samples = 50000;
  int bc_epochs = 20;
  double bc_lr = 1e-3;
  int value_epochs = 5;
  double value_lr = 1e-3;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

struct ExperimentConfig {
  SimParams sim;
  GainSet gains;
  PolicyConfig policy;
  RewardConfig reward;
  PpoConfig ppo;
  TerrainSpec terrain;
  PerturbationSpec surrogate;
  RunConfig run;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Training environment described by a config.
inline EnvSpec make_env(const ExperimentConfig& c) {
  EnvSpec e;
  e.params = c.sim;
  e.terrain = c.terrain;
  e.rough = c.run.rough;
  e.init = c.run.init_mode;
  e.reward = c.reward;
  e.episode_len_s = c.ppo.episode_len_max_s;
  e.min_stance_time = c.run.min_stance_time;
  return e;
}

inline PolicyInit make_policy_init(const PolicyConfig& c) { return {c.hidden, c.log_std, c.out_scale}; }

inline std::vector<OutputRange> resolved_ranges(const PolicyConfig& c) {
  return c.ranges.empty() ? default_ranges(c.kind) : c.ranges;
}

// ---------------------------------------------------------------------------
// Value text forms

inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <class T>
T parse_number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InvalidArgument("not a number: '" + std::string(s) + "'");
  return v;
}

inline void parse_value(std::string_view s, double& v) { v = parse_number<double>(s); }
inline void parse_value(std::string_view s, int& v) { v = parse_number<int>(s); }
inline void parse_value(std::string_view s, std::uint64_t& v) { v = parse_number<std::uint64_t>(s); }
inline void parse_value(std::string_view s, std::string& v) { v = std::string(s); }
inline void parse_value(std::string_view s, bool& v) {
  if (s == "true" || s == "1") v = true;
  else if (s == "false" || s == "0") v = false;
  else throw InvalidArgument("not a boolean: '" + std::string(s) + "'");
}
inline void parse_value(std::string_view s, PolicyKind& v) { v = policy_kind_from_string(std::string(s)); }
inline void parse_value(std::string_view s, InitMode& v) { v = init_mode_from_string(std::string(s)); }
inline void parse_value(std::string_view s, OptimizerKind& v) { v = optimizer_from_string(std::string(s)); }
inline void parse_value(std::string_view s, std::vector<int>& v) {
  v.clear();
  for (const auto& t : split_ws(s)) v.push_back(parse_number<int>(t));
}
inline void parse_value(std::string_view s, std::array<double, kObsDim>& v) {
  auto toks = split_ws(s);
  if (toks.size() != v.size()) throw InvalidArgument("expected 6 values");
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = parse_number<double>(toks[i]);
}
// "low:high low:high ..."
inline void parse_value(std::string_view s, std::vector<OutputRange>& v) {
  v.clear();
  for (const auto& t : split_ws(s)) {
    auto colon = t.find(':');
    if (colon == std::string::npos) throw InvalidArgument("range must be low:high, got '" + t + "'");
    v.push_back({parse_number<double>(std::string_view(t).substr(0, colon)),
                 parse_number<double>(std::string_view(t).substr(colon + 1))});
  }
}

inline std::string format_value(double v) { return format_double(v); }
inline std::string format_value(int v) { return std::to_string(v); }
inline std::string format_value(std::uint64_t v) { return std::to_string(v); }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(PolicyKind v) { return to_string(v); }
inline std::string format_value(InitMode v) { return to_string(v); }
inline std::string format_value(OptimizerKind v) { return to_string(v); }
inline std::string format_value(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}
inline std::string format_value(const std::array<double, kObsDim>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i]);
  return out;
}
inline std::string format_value(const std::vector<OutputRange>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_double(v[i].low) + ":" + format_double(v[i].high);
  return out;
}

// Calls f(section, key, field&) for every configurable field, in file order.
template <class C, class F>
void visit_fields(C& c, F&& f) {
  f("sim", "mass", c.sim.mass);
  f("sim", "inertia", c.sim.inertia);
  f("sim", "gravity", c.sim.gravity);
  f("sim", "dt", c.sim.dt);
  f("sim", "spring_k", c.sim.spring_k);
  f("sim", "spring_d", c.sim.spring_d);
  f("sim", "hip_lag", c.sim.hip_lag);
  f("sim", "leg_len_min", c.sim.leg_len_min);
  f("sim", "leg_len_max", c.sim.leg_len_max);
  f("sim", "torque_max", c.sim.torque_max);
  f("sim", "axial_force_max", c.sim.axial_force_max);
  f("sim", "friction_mu", c.sim.friction_mu);
  f("sim", "fall_pitch", c.sim.fall_pitch);
  f("sim", "fall_height", c.sim.fall_height);
  f("sim", "motor_rate_max", c.sim.motor_rate_max);
  f("sim", "torque_noise", c.sim.torque_noise);

  f("gains", "K_pt", c.gains.K_pt);
  f("gains", "K_dt", c.gains.K_dt);
  f("gains", "K_pz", c.gains.K_pz);
  f("gains", "K_dz", c.gains.K_dz);
  f("gains", "theta_des", c.gains.theta_des);
  f("gains", "z_des", c.gains.z_des);
  f("gains", "k", c.gains.k);
  f("gains", "v_tgt", c.gains.v_tgt);
  f("gains", "T", c.gains.T);
  f("gains", "clearance", c.gains.clearance);

  f("policy", "kind", c.policy.kind);
  f("policy", "hidden", c.policy.hidden);
  f("policy", "ranges", c.policy.ranges);
  f("policy", "log_std", c.policy.log_std);
  f("policy", "out_scale", c.policy.out_scale);

  f("reward", "C1", c.reward.C1);
  f("reward", "C2", c.reward.C2);
  f("reward", "C3", c.reward.C3);
  f("reward", "v_tgt", c.reward.v_tgt);
  f("reward", "T_max_steps", c.reward.T_max_steps);
  f("reward", "C4", c.reward.torque_penalty_C4);

  f("ppo", "clip_eps", c.ppo.clip_eps);
  f("ppo", "gamma", c.ppo.gamma);
  f("ppo", "lam", c.ppo.lam);
  f("ppo", "learning_rate", c.ppo.learning_rate);
  f("ppo", "epochs", c.ppo.epochs);
  f("ppo", "minibatch", c.ppo.minibatch);
  f("ppo", "value_coef", c.ppo.value_coef);
  f("ppo", "max_grad_norm", c.ppo.max_grad_norm);
  f("ppo", "samples_per_iter", c.ppo.samples_per_iter);
  f("ppo", "episode_len_max_s", c.ppo.episode_len_max_s);
  f("ppo", "value_scale", c.ppo.value_scale);
  f("ppo", "optimizer", c.ppo.optimizer);
  f("ppo", "workers", c.ppo.workers);

  f("terrain", "max_dev", c.terrain.max_dev);
  f("terrain", "step_len_min", c.terrain.step_len_min);
  f("terrain", "step_len_max", c.terrain.step_len_max);
  f("terrain", "extent", c.terrain.extent);

  f("surrogate", "init_mode", c.surrogate.init_mode);
  f("surrogate", "mass_scale", c.surrogate.mass_scale);
  f("surrogate", "inertia_scale", c.surrogate.inertia_scale);
  f("surrogate", "hip_lag_scale", c.surrogate.hip_lag_scale);
  f("surrogate", "spring_k_scale", c.surrogate.spring_k_scale);
  f("surrogate", "sensor_noise_std", c.surrogate.sensor_noise_std);

  f("run", "seed", c.run.seed);
  f("run", "iterations", c.run.iterations);
  f("run", "episodes", c.run.episodes);
  f("run", "out_dir", c.run.out_dir);
  f("run", "rough", c.run.rough);
  f("run", "init_mode", c.run.init_mode);
  f("run", "min_stance_time", c.run.min_stance_time);
  f("run", "bc_samples", c.run.bc_samples);
  f("run", "bc_epochs", c.run.bc_epochs);
  f("run", "bc_lr", c.run.bc_lr);
  f("run", "value_epochs", c.run.value_epochs);
  f("run", "value_lr", c.run.value_lr);
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  validate(c.sim);
  validate(c.gains, c.sim);
  if (c.policy.hidden.empty()) throw InvariantViolation("hidden", "needs at least one hidden layer");
  for (int h : c.policy.hidden)
    if (h <= 0) throw InvariantViolation("hidden", "layer sizes must be positive");
  if (!c.policy.ranges.empty()) {
    if (c.policy.ranges.size() != static_cast<std::size_t>(kActionDim))
      throw InvariantViolation("ranges", "needs exactly 3 ranges");
    for (const auto& r : c.policy.ranges)
      if (!(r.low < r.high)) throw InvariantViolation("ranges", "low must be below high");
  }
  if (!std::isfinite(c.policy.log_std)) throw InvariantViolation("log_std", "must be finite");
  if (!(c.policy.out_scale >= 0.0)) throw InvariantViolation("out_scale", "must be non-negative");
  validate(c.reward);
  validate(c.ppo);
  validate(c.terrain);
  validate(c.surrogate);
  if (c.run.iterations < 0) throw InvariantViolation("iterations", "must be non-negative");
  if (c.run.episodes <= 0) throw InvariantViolation("episodes", "must be positive");
  if (!(c.run.min_stance_time >= 0.0)) throw InvariantViolation("min_stance_time", "must be non-negative");
  if (c.run.bc_samples <= 0) throw InvariantViolation("bc_samples", "must be positive");
  if (c.run.bc_epochs < 0) throw InvariantViolation("bc_epochs", "must be non-negative");
  if (!(c.run.bc_lr > 0.0)) throw InvariantViolation("bc_lr", "must be positive");
  if (c.run.value_epochs < 0) throw InvariantViolation("value_epochs", "must be non-negative");
  if (!(c.run.value_lr > 0.0)) throw InvariantViolation("value_lr", "must be positive");
}

inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      bool known = false;
      detail::visit_fields(c, [&](const char* s, const char*, auto&) { known |= section == s; });
      if (!known) throw UnknownKey("line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    if (section.empty()) throw ParseError(line_no, "key outside of a section");
    std::string key(detail::trim(line.substr(0, eq)));
    std::string_view value = detail::trim(line.substr(eq + 1));
    bool found = false;
    detail::visit_fields(c, [&](const char* s, const char* k, auto& field) {
      if (found || section != s || key != k) return;
      found = true;
      try {
        detail::parse_value(value, field);
      } catch (const InvalidArgument& e) {
        throw ParseError(line_no, key + ": " + e.what());
      }
    });
    if (!found) throw UnknownKey("line " + std::to_string(line_no) + ": unknown key '" + key + "' in [" + section + "]");
  }
  validate(c);
  return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  std::string current;
  detail::visit_fields(c, [&](const char* s, const char* k, const auto& field) {
    if (current != s) {
      if (!current.empty()) out += "\n";
      current = s;
      out += "[" + current + "]\n";
    }
    out += std::string(k) + " = " + detail::format_value(field) + "\n";
  });
  return out;
}

}  // namespace biped
