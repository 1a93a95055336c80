#pragma once

// Pipelines shared by the command-line tool and the acceptance runs:
// expert data on flat ground, cloning, value pretraining and PPO training
// from a cloned start.

#include <cstdint>
#include <functional>
#include <random>

#include "biped/config.hpp"
#include "biped/env.hpp"
#include "biped/learning.hpp"
#include "biped/policy.hpp"

namespace biped {

// Expert demonstrations come from flat ground, where the expert walks.
inline EnvSpec demonstration_env(const ExperimentConfig& c) {
  EnvSpec e = make_env(c);
  e.rough = false;
  return e;
}

inline GaussianMlpPolicy fresh_policy(const ExperimentConfig& c, PolicyKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 101));
  GaussianMlpPolicy p = make_policy(kind, c.gains, rng, make_policy_init(c.policy));
  if (!c.policy.ranges.empty() && kind == c.policy.kind) p.output_ranges = c.policy.ranges;
  return p;
}

inline ValueNet fresh_value_net(const ExperimentConfig& c, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 102));
  return make_value_net(rng, c.policy.hidden, c.ppo.value_scale);
}

inline ExpertData expert_dataset(const ExperimentConfig& c, std::uint64_t seed) {
  return collect_expert_data(demonstration_env(c), c.gains, static_cast<std::size_t>(c.run.bc_samples),
                             mix_seed(seed, 103));
}

// Behavior-cloned mean network; log_std stays at the configured initial
// value so PPO starts with its intended exploration.
inline GaussianMlpPolicy clone_expert(const ExperimentConfig& c, PolicyKind kind, std::uint64_t seed,
                                      const ExpertData& data) {
  GaussianMlpPolicy p = fresh_policy(c, kind, seed);
  std::vector<BcSample> samples = bc_dataset(data, p);
  BcConfig bc;
  bc.lr = c.run.bc_lr;
  bc.epochs = c.run.bc_epochs;
  bc.seed = mix_seed(seed, 104);
  bc.fit_log_std = false;
  if (bc.epochs == 0) return p;
  return behavior_clone(samples, std::move(p), bc);
}

inline ValueNet pretrain_value(const ExperimentConfig& c, std::uint64_t seed, const ExpertData& data) {
  ValuePretrainConfig vc;
  vc.lr = c.run.value_lr;
  vc.epochs = c.run.value_epochs;
  vc.seed = mix_seed(seed, 105);
  if (vc.epochs == 0) return fresh_value_net(c, seed);
  return value_pretrain(data.td, fresh_value_net(c, seed), c.ppo.gamma, vc);
}

struct TrainedPair {
  GaussianMlpPolicy policy;
  ValueNet value;
  std::vector<CurveRow> curve;
};

// Clone -> value pretraining -> PPO on the configured (rough) environment.
inline TrainedPair train_from_expert(const ExperimentConfig& c, PolicyKind kind, std::uint64_t seed, int iterations,
                                     const std::function<void(const CurveRow&, const PpoStats&)>& on_iteration = {}) {
  ExpertData data = expert_dataset(c, seed);
  GaussianMlpPolicy start = clone_expert(c, kind, seed, data);
  ValueNet value = pretrain_value(c, seed, data);
  TrainResult r = train_loop(make_env(c), std::move(start), std::move(value), c.ppo, iterations,
                             mix_seed(seed, 106), on_iteration);
  return {std::move(r.policy), std::move(r.value), std::move(r.curve)};
}

}  // namespace biped
