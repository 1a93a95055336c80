#pragma once

// Sim-to-sim transfer: a perturbed "hardware surrogate" environment, policy
// evaluation at the mean action, population reports and gain retuning.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "biped/env.hpp"
#include "biped/errors.hpp"
#include "biped/learning.hpp"
#include "biped/policy.hpp"

namespace biped {

struct PerturbationSpec {
  InitMode init_mode = InitMode::PreloadedLowered;
  double mass_scale = 1.05;
  double inertia_scale = 1.05;
  double hip_lag_scale = 2.0;
  double spring_k_scale = 0.9;
  std::array<double, kObsDim> sensor_noise_std{};

  // Scales 1, training-side start, no noise.
  static PerturbationSpec identity() { return {InitMode::UnloadedDrop, 1.0, 1.0, 1.0, 1.0, {}}; }
  friend bool operator==(const PerturbationSpec&, const PerturbationSpec&) = default;
};

inline void validate(const PerturbationSpec& s) {
  if (!(s.mass_scale > 0.0)) throw InvariantViolation("mass_scale", "must be positive");
  if (!(s.inertia_scale > 0.0)) throw InvariantViolation("inertia_scale", "must be positive");
  if (!(s.hip_lag_scale > 0.0)) throw InvariantViolation("hip_lag_scale", "must be positive");
  if (!(s.spring_k_scale > 0.0)) throw InvariantViolation("spring_k_scale", "must be positive");
  for (double v : s.sensor_noise_std)
    if (!(v >= 0.0)) throw InvariantViolation("sensor_noise_std", "must be non-negative");
}

inline SimParams scale_params(const SimParams& p, const PerturbationSpec& s) {
  SimParams q = p;
  q.mass *= s.mass_scale;
  q.inertia *= s.inertia_scale;
  q.hip_lag *= s.hip_lag_scale;
  q.spring_k *= s.spring_k_scale;
  return q;
}

// Surrogate environment: nominal env with scaled parameters, the requested
// start mode and sensor noise. Terrain and reward are kept.
inline EnvSpec make_surrogate(const EnvSpec& nominal, const PerturbationSpec& s) {
  validate(s);
  EnvSpec e = nominal;
  e.params = scale_params(nominal.params, s);
  e.init = s.init_mode;
  e.sensor_noise_std = s.sensor_noise_std;
  return e;
}

// Falls are binned by time in whole seconds.
inline constexpr int kFallHistogramBins = 10;

struct EvalResult {
  int n_episodes = 0;
  int n_success = 0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
  double mean_steps = 0.0;
  // Mean |stance axial force| over stance steps after kSteadyStart seconds.
  double mean_abs_axial_steady = 0.0;
  std::array<int, kFallHistogramBins> fall_histogram{};
  std::vector<EpisodeSummary> episodes;
};

inline constexpr double kSteadyStart = 2.0;

// Deterministic in (controller, env, seed); episode i uses the same terrain
// and noise streams as episode i of collect_rollouts with that seed.
template <class MakeController>
EvalResult evaluate_controller(const EnvSpec& env, const GainSet& pipeline_gains, MakeController&& make_ctrl,
                               int n_episodes, std::uint64_t seed, int workers = 1) {
  if (n_episodes <= 0) throw InvalidArgument("evaluate: n_episodes must be positive");
  struct One {
    EpisodeSummary sum;
    double axial_sum = 0.0;
    long axial_n = 0;
  };
  std::vector<One> runs(static_cast<std::size_t>(n_episodes));
  auto run_one = [&](int i) {
    EpisodeSeeds seeds = episode_seeds(seed, static_cast<std::uint64_t>(i));
    Terrain terrain = episode_terrain(env, seeds.terrain);
    RobotState start = initial_state(env.params, pipeline_gains, terrain, env.init);
    One& o = runs[static_cast<std::size_t>(i)];
    o.sum = run_episode(env, terrain, start, pipeline_gains, seeds.noise, make_ctrl(), [&](const StepView& v) {
      if (v.after.t >= kSteadyStart && !v.after.in_flight()) {
        o.axial_sum += std::abs(v.after.axial_force);
        ++o.axial_n;
      }
    });
  };
  workers = std::max(1, std::min(workers, n_episodes));
  if (workers == 1) {
    for (int i = 0; i < n_episodes; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n_episodes; i += workers) run_one(i);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  EvalResult r;
  r.n_episodes = n_episodes;
  double axial_sum = 0.0;
  long axial_n = 0;
  for (const One& o : runs) {
    r.episodes.push_back(o.sum);
    r.mean_reward += o.sum.total_reward;
    r.mean_steps += o.sum.steps;
    if (o.sum.fell) {
      int bin = static_cast<int>(static_cast<double>(o.sum.steps) * env.params.dt);
      ++r.fall_histogram[static_cast<std::size_t>(std::clamp(bin, 0, kFallHistogramBins - 1))];
    } else {
      ++r.n_success;
    }
    axial_sum += o.axial_sum;
    axial_n += o.axial_n;
  }
  r.mean_reward /= n_episodes;
  r.mean_steps /= n_episodes;
  r.success_rate = static_cast<double>(r.n_success) / n_episodes;
  r.mean_abs_axial_steady = axial_n > 0 ? axial_sum / static_cast<double>(axial_n) : 0.0;
  return r;
}

// Success = no fall within the full episode; actions at the policy mean.
inline EvalResult evaluate_policy(const EnvSpec& env, const GaussianMlpPolicy& policy, int n_episodes,
                                  std::uint64_t seed, int workers = 1) {
  return evaluate_controller(env, policy.gains, [&] { return mean_controller(policy); }, n_episodes, seed, workers);
}

inline EvalResult evaluate_expert(const EnvSpec& env, const GainSet& gains, int n_episodes, std::uint64_t seed,
                                  int workers = 1) {
  return evaluate_controller(env, gains, [&] { return expert_controller(gains); }, n_episodes, seed, workers);
}

struct NamedPolicy {
  std::string id;
  GaussianMlpPolicy policy;
};

struct TransferRow {
  std::string policy_id;
  PolicyKind kind = PolicyKind::PureNN;
  std::string env;  // "nominal" or "surrogate"
  int n_episodes = 0;
  int n_success = 0;
  double success_rate = 0.0;
  double mean_reward = 0.0;
  double mean_steps = 0.0;
  std::array<int, kFallHistogramBins> fall_histogram{};
};

struct KindAggregate {
  PolicyKind kind = PolicyKind::PureNN;
  std::string env;
  int n_episodes = 0;
  int n_success = 0;
  double success_rate() const { return n_episodes > 0 ? static_cast<double>(n_success) / n_episodes : 0.0; }
};

struct TransferReport {
  std::vector<TransferRow> rows;  // ordered by (policy, env)
  std::vector<KindAggregate> aggregates;

  double rate(PolicyKind kind, const std::string& env) const {
    for (const auto& a : aggregates)
      if (a.kind == kind && a.env == env) return a.success_rate();
    return 0.0;
  }
};

inline TransferRow to_row(const std::string& id, PolicyKind kind, const std::string& env, const EvalResult& r) {
  return {id, kind, env, r.n_episodes, r.n_success, r.success_rate, r.mean_reward, r.mean_steps, r.fall_histogram};
}

// Every policy on both environments with the same episode seeds.
inline TransferReport transfer_experiment(const std::vector<NamedPolicy>& policies, const EnvSpec& nominal,
                                          const EnvSpec& surrogate, int n_episodes, std::uint64_t seed,
                                          int workers = 1) {
  TransferReport rep;
  for (const NamedPolicy& np : policies) {
    rep.rows.push_back(to_row(np.id, np.policy.kind, "nominal",
                              evaluate_policy(nominal, np.policy, n_episodes, seed, workers)));
    rep.rows.push_back(to_row(np.id, np.policy.kind, "surrogate",
                              evaluate_policy(surrogate, np.policy, n_episodes, seed, workers)));
  }
  for (PolicyKind kind : {PolicyKind::PureNN, PolicyKind::HeuristicNN})
    for (const char* env : {"nominal", "surrogate"}) {
      KindAggregate a{kind, env, 0, 0};
      for (const auto& r : rep.rows)
        if (r.kind == kind && r.env == env) {
          a.n_episodes += r.n_episodes;
          a.n_success += r.n_success;
        }
      if (a.n_episodes > 0) rep.aggregates.push_back(a);
    }
  return rep;
}

inline double& gain_field(GainSet& g, const std::string& name) {
  if (name == "K_pt") return g.K_pt;
  if (name == "K_dt") return g.K_dt;
  if (name == "K_pz") return g.K_pz;
  if (name == "K_dz") return g.K_dz;
  if (name == "theta_des") return g.theta_des;
  if (name == "z_des") return g.z_des;
  if (name == "k") return g.k;
  if (name == "v_tgt") return g.v_tgt;
  if (name == "T") return g.T;
  if (name == "clearance") return g.clearance;
  throw UnknownKey("unknown gain '" + name + "'");
}

// Copy of a HeuristicNN policy with one embedded gain changed; the network
// and log_std are copied untouched.
inline GaussianMlpPolicy retune_gain(const GaussianMlpPolicy& policy, const std::string& gain_name, double value,
                                     const SimParams& params = {}) {
  if (policy.kind != PolicyKind::HeuristicNN)
    throw KindMismatch("retune_gain: a PureNN policy has no embedded feedback gains");
  GaussianMlpPolicy out = policy;
  gain_field(out.gains, gain_name) = value;
  validate(out.gains, params);
  return out;
}

}  // namespace biped
