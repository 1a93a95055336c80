#pragma once

// Rollout collection, generalized advantage estimation, clipped-ratio PPO,
// behavior cloning from the expert and TD pretraining of the value network.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "biped/env.hpp"
#include "biped/errors.hpp"
#include "biped/mlp.hpp"
#include "biped/optim.hpp"
#include "biped/policy.hpp"

namespace biped {

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double lam = 0.95;
  double learning_rate = 3e-4;
  int epochs = 10;
  int minibatch = 4096;
  double value_coef = 0.5;
  double max_grad_norm = 0.5;
  int samples_per_iter = 30000;
  double episode_len_max_s = 10.0;
  // Output scale of freshly built value networks.
  double value_scale = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adam;
  int workers = 1;

  friend bool operator==(const PpoConfig&, const PpoConfig&) = default;
};

inline void validate(const PpoConfig& c) {
  if (!(c.clip_eps > 0.0 && c.clip_eps < 1.0)) throw InvariantViolation("clip_eps", "must lie in (0, 1)");
  if (!(c.gamma >= 0.0 && c.gamma <= 1.0)) throw InvariantViolation("gamma", "must lie in [0, 1]");
  if (!(c.lam >= 0.0 && c.lam <= 1.0)) throw InvariantViolation("lam", "must lie in [0, 1]");
  if (!(c.learning_rate > 0.0)) throw InvariantViolation("learning_rate", "must be positive");
  if (!(c.epochs > 0)) throw InvariantViolation("epochs", "must be positive");
  if (!(c.minibatch > 0)) throw InvariantViolation("minibatch", "must be positive");
  if (!(c.value_coef >= 0.0)) throw InvariantViolation("value_coef", "must be non-negative");
  if (!(c.max_grad_norm >= 0.0)) throw InvariantViolation("max_grad_norm", "must be non-negative");
  if (!(c.samples_per_iter > 0)) throw InvariantViolation("samples_per_iter", "must be positive");
  if (!(c.episode_len_max_s > 0.0)) throw InvariantViolation("episode_len_max_s", "must be positive");
  if (!(c.value_scale > 0.0)) throw InvariantViolation("value_scale", "must be positive");
  if (!(c.workers > 0)) throw InvariantViolation("workers", "must be positive");
}

// ---------------------------------------------------------------------------
// Rollouts

struct Transition {
  Observation obs{};
  std::array<double, kActionDim> pre_squash{};
  double logprob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  bool fell = false;
};

struct EpisodeInfo {
  std::size_t begin = 0;
  std::size_t end = 0;
  double total_reward = 0.0;
  int steps = 0;
  bool fell = false;
};

struct RolloutBatch {
  std::vector<Transition> transitions;
  std::vector<EpisodeInfo> episodes;

  std::size_t total_steps() const { return transitions.size(); }
  friend bool operator==(const RolloutBatch& a, const RolloutBatch& b) {
    if (a.transitions.size() != b.transitions.size() || a.episodes.size() != b.episodes.size()) return false;
    for (std::size_t i = 0; i < a.transitions.size(); ++i) {
      const auto &x = a.transitions[i], &y = b.transitions[i];
      if (x.obs != y.obs || x.pre_squash != y.pre_squash || x.logprob != y.logprob || x.reward != y.reward ||
          x.value != y.value || x.done != y.done || x.fell != y.fell)
        return false;
    }
    for (std::size_t i = 0; i < a.episodes.size(); ++i) {
      const auto &x = a.episodes[i], &y = b.episodes[i];
      if (x.begin != y.begin || x.end != y.end || x.total_reward != y.total_reward || x.steps != y.steps ||
          x.fell != y.fell)
        return false;
    }
    return true;
  }
};

struct EpisodeSeeds {
  std::uint64_t terrain;
  std::uint64_t noise;
  std::uint64_t action;
};

inline EpisodeSeeds episode_seeds(std::uint64_t master, std::uint64_t episode) {
  std::uint64_t e = mix_seed(master, episode);
  return {mix_seed(e, 1), mix_seed(e, 2), mix_seed(e, 3)};
}

// One stochastic episode of `policy`, values recorded from `value_net`.
inline std::vector<Transition> rollout_episode(const EnvSpec& env, const GaussianMlpPolicy& policy,
                                               const ValueNet& value_net, const EpisodeSeeds& seeds) {
  Terrain terrain = episode_terrain(env, seeds.terrain);
  RobotState start = initial_state(env.params, policy.gains, terrain, env.init);
  std::mt19937_64 rng(seeds.action);
  std::vector<Transition> out;
  out.reserve(static_cast<std::size_t>(env.max_steps()));
  Transition pending;
  run_episode(
      env, terrain, start, policy.gains, seeds.noise,
      [&](const RobotState& s, const Observation& obs) {
        PolicySample smp = policy_sample(policy, obs, rng);
        pending.obs = obs;
        pending.pre_squash = smp.pre_squash;
        pending.logprob = smp.logprob;
        pending.value = value_of(value_net, obs);
        return decode_action(policy, smp.action, s);
      },
      [&](const StepView& v) {
        pending.reward = v.reward;
        pending.done = v.done;
        pending.fell = v.fell;
        out.push_back(pending);
      });
  return out;
}

// Whole episodes until at least n_min transitions. Episode i draws its
// terrain, noise and actions from sub-seeds of (seed, i), and episodes are
// appended in index order, so the batch does not depend on `workers`.
inline RolloutBatch collect_rollouts(const EnvSpec& env, const GaussianMlpPolicy& policy, const ValueNet& value_net,
                                     std::size_t n_min, std::uint64_t seed, int workers = 1) {
  if (n_min == 0) throw InvalidArgument("collect_rollouts: n_min must be positive");
  RolloutBatch batch;
  std::uint64_t next_episode = 0;
  workers = std::max(workers, 1);
  while (batch.total_steps() < n_min) {
    std::vector<std::vector<Transition>> chunk(static_cast<std::size_t>(workers));
    if (workers == 1) {
      chunk[0] = rollout_episode(env, policy, value_net, episode_seeds(seed, next_episode));
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(chunk.size());
      for (std::size_t w = 0; w < chunk.size(); ++w)
        pool.emplace_back([&, w] {
          try {
            chunk[w] = rollout_episode(env, policy, value_net, episode_seeds(seed, next_episode + w));
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      for (auto& t : pool) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    for (auto& ep : chunk) {
      if (batch.total_steps() >= n_min) break;
      EpisodeInfo info;
      info.begin = batch.transitions.size();
      for (const auto& tr : ep) info.total_reward += tr.reward;
      info.steps = static_cast<int>(ep.size());
      info.fell = !ep.empty() && ep.back().fell;
      batch.transitions.insert(batch.transitions.end(), ep.begin(), ep.end());
      info.end = batch.transitions.size();
      batch.episodes.push_back(info);
    }
    next_episode += static_cast<std::uint64_t>(workers);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Advantages

struct Advantages {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// GAE within each episode with a zero bootstrap after `done`; returns use the
// raw advantages. If `normalize`, advantages are then standardized.
inline Advantages compute_gae(const RolloutBatch& batch, double gamma, double lam, bool normalize = true) {
  const auto& tr = batch.transitions;
  const std::size_t n = tr.size();
  Advantages out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0, next_value = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    if (tr[i].done || i + 1 == n) {
      next_adv = 0.0;
      next_value = 0.0;
    }
    double delta = tr[i].reward + gamma * next_value - tr[i].value;
    double a = delta + gamma * lam * next_adv;
    out.advantages[i] = a;
    out.returns[i] = a + tr[i].value;
    next_adv = a;
    next_value = tr[i].value;
  }
  if (normalize && n > 0) {
    double mean = std::accumulate(out.advantages.begin(), out.advantages.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : out.advantages) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / static_cast<double>(n));
    double inv = sd > 1e-12 ? 1.0 / sd : 0.0;
    for (double& a : out.advantages) a = (a - mean) * inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// PPO

struct PpoStats {
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double first_minibatch_max_ratio_dev = 0.0;  // max |ratio - 1| before any update
};

// Optimizer moments carried across PPO updates.
struct PpoOptimizers {
  Optimizer mean_net;
  Optimizer log_std;
  Optimizer value;

  explicit PpoOptimizers(OptimizerKind k = OptimizerKind::Adam) {
    mean_net.kind = k;
    log_std.kind = k;
    value.kind = k;
  }
};

// Clipped surrogate on a set of indices, averaged; gradients (of the
// negative surrogate) are accumulated into the buffers when given.
inline double ppo_surrogate(const GaussianMlpPolicy& policy, const RolloutBatch& batch,
                            std::span<const double> adv, std::span<const std::size_t> idx, double clip_eps,
                            std::vector<double>* g_mean = nullptr, std::vector<double>* g_log_std = nullptr,
                            double* ratio_sum = nullptr, int* clipped = nullptr, double* max_dev = nullptr) {
  MlpCache cache;
  std::array<double, kActionDim> up{};
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (std::size_t k : idx) {
    const Transition& t = batch.transitions[k];
    mlp_forward(policy.mean_net, t.obs, cache);
    const std::vector<double>& mean = cache.act.back();
    double lp = gaussian_logprob(mean, policy.log_std, t.pre_squash);
    double ratio = std::exp(lp - t.logprob);
    double A = adv[k];
    double clipped_ratio = detail::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    double unclipped_obj = ratio * A;
    double clipped_obj = clipped_ratio * A;
    total += std::min(unclipped_obj, clipped_obj);
    if (ratio_sum) *ratio_sum += ratio;
    if (max_dev) *max_dev = std::max(*max_dev, std::abs(ratio - 1.0));
    bool active = unclipped_obj <= clipped_obj;
    if (clipped && !active) ++*clipped;
    if (g_mean && active) {
      // d(-ratio * A)/d(logprob) = -ratio * A
      double dlp = -ratio * A * inv_n;
      for (int j = 0; j < kActionDim; ++j) {
        double var_inv = std::exp(-2.0 * policy.log_std[j]);
        double diff = t.pre_squash[j] - mean[j];
        up[j] = dlp * diff * var_inv;
        (*g_log_std)[j] += dlp * (diff * diff * var_inv - 1.0);
      }
      mlp_backward(policy.mean_net, cache, up, *g_mean);
    }
  }
  return total * inv_n;
}

inline double value_loss(const ValueNet& v, const RolloutBatch& batch, std::span<const double> returns,
                         std::span<const std::size_t> idx, double value_coef, std::vector<double>* grad = nullptr) {
  MlpCache cache;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (std::size_t k : idx) {
    mlp_forward(v.net, batch.transitions[k].obs, cache);
    double err = v.scale * cache.act.back()[0] - returns[k];
    total += err * err;
    if (grad) {
      double up = value_coef * 2.0 * err * inv_n * v.scale;
      mlp_backward(v.net, cache, std::span<const double>(&up, 1), *grad);
    }
  }
  return value_coef * total * inv_n;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

inline PpoStats ppo_update(GaussianMlpPolicy& policy, ValueNet& value_net, const RolloutBatch& batch,
                           const Advantages& adv, const PpoConfig& cfg, std::mt19937_64& rng, PpoOptimizers& opt) {
  const std::size_t n = batch.total_steps();
  if (n == 0) throw EmptyDataset("ppo_update: empty batch");
  if (adv.advantages.size() != n || adv.returns.size() != n) throw DimensionMismatch("ppo_update: advantage size");
  opt.mean_net.kind = opt.log_std.kind = opt.value.kind = cfg.optimizer;
  PpoStats stats;
  std::vector<std::size_t> order = all_indices(n);
  const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), n);
  std::vector<double> g_mean, g_log_std, g_value;
  double ratio_sum = 0.0;
  long ratio_count = 0;
  int clipped = 0;
  bool first = true;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < n; begin += mb) {
      std::span<const std::size_t> idx(order.data() + begin, std::min(mb, n - begin));
      g_mean.assign(policy.mean_net.values.size(), 0.0);
      g_log_std.assign(policy.log_std.size(), 0.0);
      g_value.assign(value_net.net.values.size(), 0.0);
      double max_dev = 0.0;
      double surr = ppo_surrogate(policy, batch, adv.advantages, idx, cfg.clip_eps, &g_mean, &g_log_std, &ratio_sum,
                                  &clipped, &max_dev);
      if (first) stats.first_minibatch_max_ratio_dev = max_dev;
      first = false;
      ratio_count += static_cast<long>(idx.size());
      double vloss = value_loss(value_net, batch, adv.returns, idx, cfg.value_coef, &g_value);
      if (!std::isfinite(surr) || !std::isfinite(vloss)) throw NonFiniteError("ppo_update: loss diverged");
      stats.policy_loss = -surr;
      stats.value_loss = vloss;
      clip_global_norm(g_mean, g_log_std, cfg.max_grad_norm);
      clip_global_norm(g_value, {}, cfg.max_grad_norm);
      opt.mean_net.step(policy.mean_net.values, g_mean, cfg.learning_rate);
      opt.log_std.step(policy.log_std, g_log_std, cfg.learning_rate);
      opt.value.step(value_net.net.values, g_value, cfg.learning_rate);
    }
  }
  if (!policy.mean_net.all_finite() || !value_net.net.all_finite()) throw NonFiniteError("ppo_update: parameters diverged");
  stats.mean_ratio = ratio_sum / static_cast<double>(ratio_count);
  stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(ratio_count);
  return stats;
}

inline PpoStats ppo_update(GaussianMlpPolicy& policy, ValueNet& value_net, const RolloutBatch& batch,
                           const Advantages& adv, const PpoConfig& cfg, std::mt19937_64& rng) {
  PpoOptimizers opt(cfg.optimizer);
  return ppo_update(policy, value_net, batch, adv, cfg, rng, opt);
}

// ---------------------------------------------------------------------------
// Imitation

struct BcSample {
  Observation obs{};
  std::array<double, kActionDim> target{};  // pre-squash expert action
};

struct TdSample {
  Observation obs{};
  double reward = 0.0;
  Observation next_obs{};
  bool done = false;
};

struct ExpertData {
  std::vector<Observation> obs;
  std::vector<Action> actions;
  std::vector<TdSample> td;
  int episodes = 0;
};

// Expert action expressed in a policy's output space, pulled back through
// the squash. For HeuristicNN the expert corresponds to zero offsets.
inline std::array<double, kActionDim> expert_pre_squash(const GaussianMlpPolicy& policy, const Action& a) {
  std::array<double, kActionDim> squashed =
      policy.kind == PolicyKind::PureNN ? std::array<double, kActionDim>{a.F_x, a.F_z, a.x_p}
                                        : std::array<double, kActionDim>{0.0, 0.0, 0.0};
  std::array<double, kActionDim> out{};
  for (int i = 0; i < kActionDim; ++i) out[i] = unsquash(squashed[i], policy.output_ranges[i]);
  return out;
}

// Expert episodes until at least n_min transitions.
inline ExpertData collect_expert_data(const EnvSpec& env, const GainSet& gains, std::size_t n_min,
                                      std::uint64_t seed) {
  if (n_min == 0) throw InvalidArgument("collect_expert_data: n_min must be positive");
  ExpertData data;
  std::uint64_t ep = 0;
  while (data.obs.size() < n_min) {
    EpisodeSeeds seeds = episode_seeds(seed, ep++);
    Terrain terrain = episode_terrain(env, seeds.terrain);
    RobotState start = initial_state(env.params, gains, terrain, env.init);
    run_episode(env, terrain, start, gains, seeds.noise, expert_controller(gains), [&](const StepView& v) {
      data.obs.push_back(v.obs);
      data.actions.push_back(v.action);
      data.td.push_back({v.obs, v.reward, make_observation(v.after), v.done});
    });
    ++data.episodes;
  }
  return data;
}

// Cloning targets for a given policy layout.
inline std::vector<BcSample> bc_dataset(const ExpertData& data, const GaussianMlpPolicy& layout) {
  std::vector<BcSample> out;
  out.reserve(data.obs.size());
  for (std::size_t i = 0; i < data.obs.size(); ++i) out.push_back({data.obs[i], expert_pre_squash(layout, data.actions[i])});
  return out;
}

struct BcConfig {
  double lr = 1e-3;
  int epochs = 30;
  int minibatch = 256;
  std::uint64_t seed = 0;
  bool fit_log_std = true;
};

// Negative mean log-likelihood; gradients into g_mean / g_log_std if given.
inline double bc_loss(const GaussianMlpPolicy& policy, std::span<const BcSample> data,
                      std::span<const std::size_t> idx, std::vector<double>* g_mean = nullptr,
                      std::vector<double>* g_log_std = nullptr) {
  MlpCache cache;
  std::array<double, kActionDim> up{};
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (std::size_t k : idx) {
    mlp_forward(policy.mean_net, data[k].obs, cache);
    const std::vector<double>& mean = cache.act.back();
    total -= gaussian_logprob(mean, policy.log_std, data[k].target);
    if (g_mean) {
      for (int j = 0; j < kActionDim; ++j) {
        double var_inv = std::exp(-2.0 * policy.log_std[j]);
        double diff = data[k].target[j] - mean[j];
        up[j] = -inv_n * diff * var_inv;
        (*g_log_std)[j] += -inv_n * (diff * diff * var_inv - 1.0);
      }
      mlp_backward(policy.mean_net, cache, up, *g_mean);
    }
  }
  return total * inv_n;
}

inline double bc_loss(const GaussianMlpPolicy& policy, std::span<const BcSample> data) {
  auto idx = all_indices(data.size());
  return bc_loss(policy, data, idx);
}

// Maximum-likelihood fit of the policy to expert pre-squash actions.
inline GaussianMlpPolicy behavior_clone(std::span<const BcSample> data, GaussianMlpPolicy policy,
                                        const BcConfig& cfg) {
  if (data.empty()) throw EmptyDataset("behavior_clone: no samples");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = all_indices(data.size());
  const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.minibatch, 1)), data.size());
  Optimizer om, os;
  std::vector<double> gm, gs;
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < data.size(); b += mb) {
      std::span<const std::size_t> idx(order.data() + b, std::min(mb, data.size() - b));
      gm.assign(policy.mean_net.values.size(), 0.0);
      gs.assign(policy.log_std.size(), 0.0);
      double loss = bc_loss(policy, data, idx, &gm, &gs);
      if (!std::isfinite(loss)) throw NonFiniteError("behavior_clone: loss diverged");
      om.step(policy.mean_net.values, gm, cfg.lr);
      if (cfg.fit_log_std) os.step(policy.log_std, gs, cfg.lr);
    }
  }
  return policy;
}

// Mean squared TD error (V(s) - r - gamma V(s') (1 - done))^2 with its full
// gradient (through both V(s) and V(s')).
inline double td_loss(const ValueNet& v, std::span<const TdSample> data, std::span<const std::size_t> idx,
                      double gamma, std::vector<double>* grad = nullptr) {
  MlpCache c0, c1;
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double total = 0.0;
  for (std::size_t k : idx) {
    const TdSample& s = data[k];
    mlp_forward(v.net, s.obs, c0);
    double v0 = v.scale * c0.act.back()[0];
    double boot = s.done ? 0.0 : gamma;
    double v1 = 0.0;
    if (boot != 0.0) {
      mlp_forward(v.net, s.next_obs, c1);
      v1 = v.scale * c1.act.back()[0];
    }
    double delta = v0 - s.reward - boot * v1;
    total += delta * delta;
    if (grad) {
      double up0 = 2.0 * delta * inv_n * v.scale;
      mlp_backward(v.net, c0, std::span<const double>(&up0, 1), *grad);
      if (boot != 0.0) {
        double up1 = -boot * up0;
        mlp_backward(v.net, c1, std::span<const double>(&up1, 1), *grad);
      }
    }
  }
  return total * inv_n;
}

inline double td_loss(const ValueNet& v, std::span<const TdSample> data, double gamma) {
  auto idx = all_indices(data.size());
  return td_loss(v, data, idx, gamma);
}

struct ValuePretrainConfig {
  double lr = 1e-3;
  int epochs = 10;
  int minibatch = 256;
  std::uint64_t seed = 0;
};

inline ValueNet value_pretrain(std::span<const TdSample> data, ValueNet v, double gamma,
                               const ValuePretrainConfig& cfg) {
  if (data.empty()) throw EmptyDataset("value_pretrain: no samples");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = all_indices(data.size());
  const std::size_t mb = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.minibatch, 1)), data.size());
  Optimizer opt;
  std::vector<double> g;
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < data.size(); b += mb) {
      std::span<const std::size_t> idx(order.data() + b, std::min(mb, data.size() - b));
      g.assign(v.net.values.size(), 0.0);
      double loss = td_loss(v, data, idx, gamma, &g);
      if (!std::isfinite(loss)) throw NonFiniteError("value_pretrain: loss diverged");
      opt.step(v.net.values, g, cfg.lr);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Training loop

struct CurveRow {
  int iteration = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double mean_episode_steps = 0.0;
  double fall_fraction = 0.0;
};

inline CurveRow summarize(const RolloutBatch& batch, int iteration) {
  CurveRow row;
  row.iteration = iteration;
  const double n = static_cast<double>(batch.episodes.size());
  if (batch.episodes.empty()) return row;
  double falls = 0.0, steps = 0.0;
  for (const auto& e : batch.episodes) {
    row.mean_reward += e.total_reward;
    steps += e.steps;
    falls += e.fell ? 1.0 : 0.0;
  }
  row.mean_reward /= n;
  for (const auto& e : batch.episodes) row.std_reward += (e.total_reward - row.mean_reward) * (e.total_reward - row.mean_reward);
  row.std_reward = std::sqrt(row.std_reward / n);
  row.mean_episode_steps = steps / n;
  row.fall_fraction = falls / n;
  return row;
}

struct TrainResult {
  GaussianMlpPolicy policy;
  ValueNet value;
  std::vector<CurveRow> curve;
};

// collect -> GAE -> PPO, `iterations` times. The curve row of iteration i
// describes the batch collected with the policy as it was before update i.
inline TrainResult train_loop(const EnvSpec& env, GaussianMlpPolicy policy, ValueNet value, const PpoConfig& cfg,
                              int iterations, std::uint64_t seed,
                              const std::function<void(const CurveRow&, const PpoStats&)>& on_iteration = {}) {
  if (iterations < 0) throw InvalidArgument("train_loop: negative iteration count");
  EnvSpec e = env;
  e.episode_len_s = cfg.episode_len_max_s;
  PpoOptimizers opt(cfg.optimizer);
  TrainResult out;
  for (int it = 0; it < iterations; ++it) {
    std::uint64_t it_seed = mix_seed(seed, static_cast<std::uint64_t>(it));
    RolloutBatch batch =
        collect_rollouts(e, policy, value, static_cast<std::size_t>(cfg.samples_per_iter), it_seed, cfg.workers);
    Advantages adv = compute_gae(batch, cfg.gamma, cfg.lam);
    std::mt19937_64 rng(mix_seed(it_seed, 0xABCDEF));
    PpoStats stats = ppo_update(policy, value, batch, adv, cfg, rng, opt);
    CurveRow row = summarize(batch, it);
    out.curve.push_back(row);
    if (on_iteration) on_iteration(row, stats);
  }
  out.policy = std::move(policy);
  out.value = std::move(value);
  return out;
}

}  // namespace biped
