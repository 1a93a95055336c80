#pragma once

// Episode machinery shared by data collection, evaluation and logging:
// start states, the environment description and the closed-loop runner.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "biped/expert.hpp"
#include "biped/policy.hpp"
#include "biped/reward.hpp"
#include "biped/sim.hpp"

namespace biped {

enum class InitMode { UnloadedDrop, PreloadedLowered };

inline const char* to_string(InitMode m) { return m == InitMode::UnloadedDrop ? "UnloadedDrop" : "PreloadedLowered"; }

inline InitMode init_mode_from_string(const std::string& s) {
  if (s == "UnloadedDrop") return InitMode::UnloadedDrop;
  if (s == "PreloadedLowered") return InitMode::PreloadedLowered;
  throw InvalidArgument("unknown init mode '" + s + "'");
}

// Drop height of the unloaded start above leg-supported height.
inline constexpr double kStartDrop = 0.01;
// Initial lift of the swing foot relative to the support leg.
inline constexpr double kStartSwingLift = 0.05;

namespace detail {

inline void start_swing_leg(RobotState& s, double length) {
  s.right.angle = 0.0;
  s.right.length = length;
  s.right.motor_length = length;
  update_foot(s.right, {s.x, s.z});
  s.swing_start_t = 0.0;
  s.swing_start_foot = {0.0, -length};
  s.swing_start_vel = {0.0, 0.0};
}

}  // namespace detail

// UnloadedDrop: left leg vertical with an undeflected spring, CoM released
// kStartDrop above leg-supported height, so the controller has to build leg
// force from zero after touchdown.
// PreloadedLowered: left foot already on the ground with the spring deflected
// to carry the full weight, CoM at the height where the expert's vertical law
// asks for exactly that weight.
inline RobotState initial_state(const SimParams& p, const GainSet& g, const Terrain& terrain, InitMode mode) {
  RobotState s;
  const double ground = terrain_height(terrain, 0.0);
  s.x = 0.0;
  s.support = Side::Left;
  if (mode == InitMode::UnloadedDrop) {
    double L0 = std::min(g.z_des, p.leg_len_max);
    s.z = ground + L0 + kStartDrop;
    s.stance_leg = StanceLeg::Flight;
    s.left.angle = 0.0;
    s.left.length = L0;
    s.left.motor_length = L0;
    update_foot(s.left, {s.x, s.z});
    detail::start_swing_leg(s, L0 - kStartSwingLift);
  } else {
    double weight = p.mass * p.gravity;
    double z_rel = g.z_des - weight / g.K_pz;
    z_rel = detail::clamp(z_rel, p.leg_len_min, p.leg_len_max);
    s.z = ground + z_rel;
    s.stance_leg = StanceLeg::Left;
    s.left.angle = 0.0;
    s.left.length = z_rel;
    s.left.foot_x = 0.0;
    s.left.foot_z = ground;
    s.left.pinned_x = 0.0;
    s.left.pinned_z = ground;
    s.left.in_contact = true;
    s.left.motor_length = z_rel + weight / p.spring_k;
    s.axial_force = axial_spring_force(s.left.motor_length, s.left.length, 0.0, p);
    detail::start_swing_leg(s, z_rel - kStartSwingLift);
  }
  return s;
}

struct EnvSpec {
  SimParams params;
  TerrainSpec terrain;
  bool rough = true;
  InitMode init = InitMode::UnloadedDrop;
  RewardConfig reward;
  double episode_len_s = 10.0;
  double min_stance_time = 0.05;
  // Per-channel noise on the measured (x, dx, z, dz, pitch, pitch_rate).
  std::array<double, kObsDim> sensor_noise_std{};

  int max_steps() const { return static_cast<int>(std::lround(episode_len_s / params.dt)); }
  friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

inline Terrain episode_terrain(const EnvSpec& env, std::uint64_t seed) {
  return env.rough ? generate_terrain(seed, env.terrain) : Terrain::flat(0.0);
}

// SplitMix64 finalizer; derives independent sub-seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct StepView {
  int index;
  const RobotState& before;
  const Observation& obs;
  const Action& action;
  const MotorCommand& cmd;
  const RobotState& after;
  double reward;
  bool fell;
  bool done;
};

struct EpisodeSummary {
  int steps = 0;
  bool fell = false;
  double total_reward = 0.0;
  double distance = 0.0;
  double final_speed = 0.0;
  double max_speed = 0.0;
};

// Closed loop: measure -> act -> motor commands -> physics -> contact logic
// -> reward. `act(measured_state, obs)` returns the Action; `on_step` sees
// every transition. Actuation uses `pipeline_gains` for the swing duration
// and clearance.
template <class ActFn, class OnStep>
EpisodeSummary run_episode(const EnvSpec& env, const Terrain& terrain, const RobotState& start,
                           const GainSet& pipeline_gains, std::uint64_t noise_seed, ActFn&& act, OnStep&& on_step) {
  const SimParams& p = env.params;
  FsmParams fp;
  fp.min_stance_time = env.min_stance_time;
  fp.swing_duration = pipeline_gains.T;
  std::mt19937_64 noise_rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  bool sensor_noise = false;
  for (double v : env.sensor_noise_std) sensor_noise |= v > 0.0;

  EpisodeSummary sum;
  RobotState s = start;
  const int max_steps = env.max_steps();
  for (int n = 0; n < max_steps; ++n) {
    RobotState measured = s;
    if (sensor_noise) {
      measured.x += env.sensor_noise_std[0] * normal(noise_rng);
      measured.dx += env.sensor_noise_std[1] * normal(noise_rng);
      measured.z += env.sensor_noise_std[2] * normal(noise_rng);
      measured.dz += env.sensor_noise_std[3] * normal(noise_rng);
      measured.pitch += env.sensor_noise_std[4] * normal(noise_rng);
      measured.pitch_rate += env.sensor_noise_std[5] * normal(noise_rng);
    }
    Observation obs = make_observation(measured);
    Action a = act(static_cast<const RobotState&>(measured), static_cast<const Observation&>(obs));
    MotorCommand cmd = to_motor_command(measured, a, pipeline_gains, p, terrain);
    if (p.torque_noise > 0.0) cmd.stance_hip_torque += p.torque_noise * uniform(noise_rng);
    RobotState next = step(s, cmd, p, terrain);
    next = fsm_update(next, terrain, p, fp);
    bool fell = check_fall(next, p);
    double r = reward(next.dx, next.pitch_rate, fell, env.reward);
    if (env.reward.torque_penalty_C4 > 0.0) r = reward_torque_penalty(r, next.axial_force, next.applied_torque, env.reward);
    bool done = fell || n + 1 == max_steps;
    on_step(StepView{n, s, obs, a, cmd, next, r, fell, done});
    sum.steps = n + 1;
    sum.total_reward += r;
    sum.max_speed = std::max(sum.max_speed, std::abs(next.dx));
    s = next;
    if (fell) {
      sum.fell = true;
      break;
    }
  }
  sum.distance = s.x - start.x;
  sum.final_speed = s.dx;
  return sum;
}

template <class ActFn>
EpisodeSummary run_episode(const EnvSpec& env, const Terrain& terrain, const RobotState& start,
                           const GainSet& pipeline_gains, std::uint64_t noise_seed, ActFn&& act) {
  return run_episode(env, terrain, start, pipeline_gains, noise_seed, std::forward<ActFn>(act), [](const StepView&) {});
}

// Expert controller on its own gains.
inline auto expert_controller(const GainSet& g) {
  return [&g](const RobotState& s, const Observation&) { return expert_action(s, g); };
}

// Deterministic policy at its mean.
inline auto mean_controller(const GaussianMlpPolicy& pol) {
  return [&pol](const RobotState& s, const Observation& obs) {
    PolicySample smp = policy_mean(pol, obs);
    return decode_action(pol, smp.action, s);
  };
}

}  // namespace biped
