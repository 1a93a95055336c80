#pragma once

// Planar torso with two massless series-elastic telescoping legs.
//
// Conventions:
//   * world frame: +x forward, +z up.
//   * leg angle is measured from the downward vertical, positive = foot ahead
//     of the hip, so foot = hip + length * (sin angle, -cos angle).
//   * pitch is positive when the torso leans backward (counter-clockwise with
//     +x to the right and +z up). The stance hip torque acts on the torso with
//     this sign, which makes the pitch feedback of the controller restoring.
//   * the hip sits at the CoM.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "biped/errors.hpp"

namespace biped {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.z}; }
  friend bool operator==(Vec2, Vec2) = default;
  double dot(Vec2 o) const { return x * o.x + z * o.z; }
  double norm() const { return std::hypot(x, z); }
};

struct SimParams {
  double mass = 64.0;
  double inertia = 2.2;
  double gravity = 9.81;
  double dt = 0.001;
  double spring_k = 1.0e4;
  double spring_d = 100.0;
  double hip_lag = 0.02;
  double leg_len_min = 0.5;
  double leg_len_max = 1.0;
  double torque_max = 200.0;
  double axial_force_max = 2000.0;
  double friction_mu = 1.0;
  double fall_pitch = 0.5;
  double fall_height = 0.5;
  // Motor-side leg length slew limit.
  double motor_rate_max = 2.0;
  // Half-width of the uniform hip-torque noise; zero disables it.
  double torque_noise = 0.0;

  friend bool operator==(const SimParams&, const SimParams&) = default;
};

// Throws InvariantViolation naming the first offending field.
inline void validate(const SimParams& p) {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvariantViolation(name, "must be positive and finite");
  };
  positive("dt", p.dt);
  positive("mass", p.mass);
  positive("inertia", p.inertia);
  positive("gravity", p.gravity);
  positive("spring_k", p.spring_k);
  positive("spring_d", p.spring_d);
  positive("hip_lag", p.hip_lag);
  positive("leg_len_min", p.leg_len_min);
  positive("leg_len_max", p.leg_len_max);
  positive("torque_max", p.torque_max);
  positive("axial_force_max", p.axial_force_max);
  positive("friction_mu", p.friction_mu);
  positive("fall_pitch", p.fall_pitch);
  positive("fall_height", p.fall_height);
  positive("motor_rate_max", p.motor_rate_max);
  if (!(p.leg_len_min < p.leg_len_max)) throw InvariantViolation("leg_len_min", "must be below leg_len_max");
  if (!(p.fall_height < p.leg_len_max)) throw InvariantViolation("fall_height", "must be below leg_len_max");
  if (!(p.torque_noise >= 0.0)) throw InvariantViolation("torque_noise", "must be non-negative");
}

// ---------------------------------------------------------------------------
// Terrain

struct TerrainSegment {
  double start_x;
  double height;
  friend bool operator==(const TerrainSegment&, const TerrainSegment&) = default;
};

// Piecewise-constant ground. Segment i covers [start_x_i, start_x_{i+1}); the
// first segment also covers everything to its left, the last everything right.
struct Terrain {
  std::vector<TerrainSegment> segments{{0.0, 0.0}};

  static Terrain flat(double height = 0.0) { return Terrain{{{0.0, height}}}; }
  friend bool operator==(const Terrain&, const Terrain&) = default;
};

inline double terrain_height(const Terrain& terrain, double x) {
  const auto& seg = terrain.segments;
  if (seg.empty()) throw InvalidArgument("terrain_height: empty terrain");
  // Last segment whose start_x <= x.
  std::size_t lo = 0, hi = seg.size();
  while (hi - lo > 1) {
    std::size_t mid = (lo + hi) / 2;
    if (seg[mid].start_x <= x)
      lo = mid;
    else
      hi = mid;
  }
  return seg[lo].height;
}

struct TerrainSpec {
  double max_dev = 0.10;
  double step_len_min = 0.3;
  double step_len_max = 0.8;
  double extent = 20.0;
  friend bool operator==(const TerrainSpec&, const TerrainSpec&) = default;
};

inline void validate(const TerrainSpec& t) {
  if (!(t.max_dev >= 0.0)) throw InvariantViolation("max_dev", "must be non-negative");
  if (!(t.step_len_min > 0.0)) throw InvariantViolation("step_len_min", "must be positive");
  if (!(t.step_len_min <= t.step_len_max)) throw InvariantViolation("step_len_max", "must be >= step_len_min");
  if (!(t.extent >= 0.0)) throw InvariantViolation("extent", "must be non-negative");
}

// Random step terrain starting at x = 0 with a level first segment.
inline Terrain generate_terrain(std::uint64_t seed, double max_dev, double step_len_min, double step_len_max,
                                double extent) {
  if (!(extent >= 0.0)) throw InvalidArgument("generate_terrain: negative extent");
  if (!(max_dev >= 0.0)) throw InvalidArgument("generate_terrain: negative max_dev");
  if (!(step_len_min > 0.0 && step_len_min <= step_len_max))
    throw InvalidArgument("generate_terrain: need 0 < step_len_min <= step_len_max");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> len(step_len_min, step_len_max);
  std::uniform_real_distribution<double> height(-max_dev, max_dev);
  Terrain t;
  t.segments = {{0.0, 0.0}};
  double cursor = len(rng);
  while (cursor < extent) {
    // uniform_real_distribution(a, a) is fine but would still consume draws.
    double h = max_dev > 0.0 ? height(rng) : 0.0;
    t.segments.push_back({cursor, h});
    cursor += len(rng);
  }
  return t;
}

inline Terrain generate_terrain(std::uint64_t seed, const TerrainSpec& spec) {
  return generate_terrain(seed, spec.max_dev, spec.step_len_min, spec.step_len_max, spec.extent);
}

// ---------------------------------------------------------------------------
// State

struct LegState {
  double angle = 0.0;
  double length = 0.9;
  double angle_rate = 0.0;
  double length_rate = 0.0;
  double motor_length = 0.9;
  double hip_torque_actual = 0.0;
  double foot_x = 0.0;
  double foot_z = 0.0;
  bool in_contact = false;
  double pinned_x = 0.0;
  double pinned_z = 0.0;

  friend bool operator==(const LegState&, const LegState&) = default;
};

enum class Side : std::uint8_t { Left, Right };
enum class StanceLeg : std::uint8_t { Left, Right, Flight };

inline Side other(Side s) { return s == Side::Left ? Side::Right : Side::Left; }
inline StanceLeg as_stance(Side s) { return s == Side::Left ? StanceLeg::Left : StanceLeg::Right; }

struct RobotState {
  double x = 0.0;
  double z = 0.9;
  double dx = 0.0;
  double dz = 0.0;
  double pitch = 0.0;
  double pitch_rate = 0.0;
  LegState left;
  LegState right;
  StanceLeg stance_leg = StanceLeg::Left;
  // Leg that carries (or last carried) the load; meaningful during Flight too.
  Side support = Side::Left;
  double t = 0.0;
  int steps_taken = 0;

  // Phase bookkeeping used by the state machine and the swing planner.
  double stance_start_t = 0.0;
  double swing_start_t = 0.0;
  Vec2 swing_start_foot{0.0, -0.8};  // hip-relative
  Vec2 swing_start_vel{0.0, 0.0};    // hip-relative
  int unloaded_steps = 0;

  // Forces applied to the torso during the last step.
  double axial_force = 0.0;
  double applied_fx = 0.0;
  double applied_fz = 0.0;
  double applied_torque = 0.0;

  LegState& leg(Side s) { return s == Side::Left ? left : right; }
  const LegState& leg(Side s) const { return s == Side::Left ? left : right; }
  LegState& support_leg() { return leg(support); }
  const LegState& support_leg() const { return leg(support); }
  LegState& swing_leg() { return leg(other(support)); }
  const LegState& swing_leg() const { return leg(other(support)); }
  bool in_flight() const { return stance_leg == StanceLeg::Flight; }

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct MotorCommand {
  double stance_motor_length = 0.0;
  double stance_hip_torque = 0.0;
  double swing_angle_target = 0.0;
  double swing_length_target = 0.8;
  double swing_angle_rate_target = 0.0;
  double swing_length_rate_target = 0.0;
};

// Positive = compression, pushing the torso away from the foot.
inline double axial_spring_force(double motor_length, double length, double length_rate, const SimParams& p) {
  return p.spring_k * (motor_length - length) - p.spring_d * length_rate;
}

// Unit vector from hip to foot and the perpendicular used by the hip torque.
inline Vec2 leg_axis(double angle) { return {std::sin(angle), -std::cos(angle)}; }
inline Vec2 leg_normal(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Force exerted on the torso by a stance leg carrying `axial` along its axis
// and `hip_torque` at the hip, before friction/unilateral saturation.
inline Vec2 stance_force(double axial, double hip_torque, double angle, double length) {
  Vec2 u = leg_axis(angle);
  Vec2 n = leg_normal(angle);
  return (-axial) * u + (hip_torque / length) * n;
}

// Rewrites angle/length/foot from the hip position and a foot point.
inline void set_leg_geometry(LegState& leg, Vec2 hip, Vec2 foot) {
  Vec2 d = foot - hip;
  leg.length = d.norm();
  leg.angle = std::atan2(d.x, -d.z);
  leg.foot_x = foot.x;
  leg.foot_z = foot.z;
}

inline void update_foot(LegState& leg, Vec2 hip) {
  Vec2 u = leg_axis(leg.angle);
  leg.foot_x = hip.x + leg.length * u.x;
  leg.foot_z = hip.z + leg.length * u.z;
}

namespace detail {

inline bool all_finite(const LegState& l) {
  return std::isfinite(l.angle) && std::isfinite(l.length) && std::isfinite(l.angle_rate) &&
         std::isfinite(l.length_rate) && std::isfinite(l.motor_length) && std::isfinite(l.hip_torque_actual) &&
         std::isfinite(l.foot_x) && std::isfinite(l.foot_z);
}

inline bool all_finite(const RobotState& s) {
  return std::isfinite(s.x) && std::isfinite(s.z) && std::isfinite(s.dx) && std::isfinite(s.dz) &&
         std::isfinite(s.pitch) && std::isfinite(s.pitch_rate) && all_finite(s.left) && all_finite(s.right) &&
         std::isfinite(s.axial_force);
}

inline double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// First-order tracking of a (position, rate) target for a massless joint.
inline void track(double& pos, double& rate, double target, double rate_target, double lag, double dt) {
  rate = rate_target + (target - pos) / lag;
  pos += rate * dt;
}

inline void advance_swing(LegState& leg, const MotorCommand& cmd, const SimParams& p, Vec2 hip) {
  track(leg.angle, leg.angle_rate, cmd.swing_angle_target, cmd.swing_angle_rate_target, p.hip_lag, p.dt);
  track(leg.length, leg.length_rate, cmd.swing_length_target, cmd.swing_length_rate_target, p.hip_lag, p.dt);
  if (leg.length < p.leg_len_min || leg.length > p.leg_len_max) {
    leg.length = clamp(leg.length, p.leg_len_min, p.leg_len_max);
    leg.length_rate = 0.0;
  }
  leg.motor_length = leg.length;
  leg.hip_torque_actual = 0.0;
  leg.in_contact = false;
  update_foot(leg, hip);
}

}  // namespace detail

// One fixed step. Velocities take the explicit-force update and positions
// advance with the mean of old and new velocity, which is exact under
// constant acceleration (ballistic phases).
inline RobotState step(const RobotState& state, const MotorCommand& cmd, const SimParams& p,
                       [[maybe_unused]] const Terrain& terrain) {
  RobotState s = state;
  const double dt = p.dt;
  double fx = 0.0, fz = 0.0, torque = 0.0, axial = 0.0;

  if (!s.in_flight()) {
    LegState& st = s.support_leg();
    double target = cmd.stance_motor_length;
    double max_move = p.motor_rate_max * dt;
    st.motor_length += detail::clamp(target - st.motor_length, -max_move, max_move);

    double tau_cmd = detail::clamp(cmd.stance_hip_torque, -p.torque_max, p.torque_max);
    st.hip_torque_actual += (dt / p.hip_lag) * (tau_cmd - st.hip_torque_actual);
    st.hip_torque_actual = detail::clamp(st.hip_torque_actual, -p.torque_max, p.torque_max);

    axial = axial_spring_force(st.motor_length, st.length, st.length_rate, p);
    axial = detail::clamp(axial, -p.axial_force_max, p.axial_force_max);
    Vec2 f = stance_force(axial, st.hip_torque_actual, st.angle, st.length);
    fz = std::max(f.z, 0.0);
    double fx_lim = p.friction_mu * fz;
    fx = detail::clamp(f.x, -fx_lim, fx_lim);
    torque = st.hip_torque_actual;
  }

  const double ax = fx / p.mass;
  const double az = fz / p.mass - p.gravity;
  const double apitch = torque / p.inertia;

  const double dx0 = s.dx, dz0 = s.dz, w0 = s.pitch_rate;
  s.dx += ax * dt;
  s.dz += az * dt;
  s.pitch_rate += apitch * dt;
  s.x += 0.5 * (dx0 + s.dx) * dt;
  s.z += 0.5 * (dz0 + s.dz) * dt;
  s.pitch += 0.5 * (w0 + s.pitch_rate) * dt;
  s.t += dt;

  s.axial_force = axial;
  s.applied_fx = fx;
  s.applied_fz = fz;
  s.applied_torque = torque;

  Vec2 hip{s.x, s.z};

  if (!s.in_flight()) {
    LegState& st = s.support_leg();
    Vec2 foot{st.pinned_x, st.pinned_z};
    set_leg_geometry(st, hip, foot);
    if (st.length < p.leg_len_min) {
      // Hard stop: the hip is pushed back onto the minimum-length circle and
      // loses its compressing radial velocity.
      Vec2 u = leg_axis(st.angle);
      hip = foot - p.leg_len_min * u;
      s.x = hip.x;
      s.z = hip.z;
      Vec2 v{s.dx, s.dz};
      double radial = v.dot(u);  // > 0 means the hip moves toward the foot
      if (radial > 0.0) {
        s.dx -= radial * u.x;
        s.dz -= radial * u.z;
      }
      set_leg_geometry(st, hip, foot);
      st.length = p.leg_len_min;
    }
    Vec2 d = foot - hip;
    Vec2 rel_v{-s.dx, -s.dz};
    st.length_rate = d.dot(rel_v) / st.length;
    st.angle_rate = (-d.z * rel_v.x + d.x * rel_v.z) / (st.length * st.length);
    st.foot_x = foot.x;
    st.foot_z = foot.z;
    st.in_contact = true;

    if (st.length > p.leg_len_max) {
      // Leg fully extended: the foot leaves the ground.
      st.length = p.leg_len_max;
      st.length_rate = 0.0;
      st.angle_rate = 0.0;
      st.motor_length = st.length;
      st.hip_torque_actual = 0.0;
      st.in_contact = false;
      update_foot(st, hip);
      s.stance_leg = StanceLeg::Flight;
      s.unloaded_steps = 0;
    }
  } else {
    LegState& held = s.support_leg();
    held.angle_rate = 0.0;
    held.length_rate = 0.0;
    held.motor_length = held.length;
    held.hip_torque_actual = 0.0;
    held.in_contact = false;
    update_foot(held, hip);
  }

  detail::advance_swing(s.swing_leg(), cmd, p, hip);

  if (!detail::all_finite(s)) throw NonFiniteError("step: state left the finite range at t=" + std::to_string(s.t));
  return s;
}

struct FsmParams {
  double min_stance_time = 0.05;
  // Nominal swing duration; touchdown is accepted after half of it.
  double swing_duration = 0.34;
  int liftoff_steps = 5;
};

namespace detail {

inline void begin_stance(RobotState& s, Side side, const Terrain& terrain) {
  LegState& leg = s.leg(side);
  Vec2 hip{s.x, s.z};
  double gx = leg.foot_x;
  double gz = terrain_height(terrain, gx);
  leg.pinned_x = gx;
  leg.pinned_z = gz;
  set_leg_geometry(leg, hip, {gx, gz});
  Vec2 d{gx - s.x, gz - s.z};
  Vec2 rel_v{-s.dx, -s.dz};
  leg.length_rate = d.dot(rel_v) / leg.length;
  leg.angle_rate = (-d.z * rel_v.x + d.x * rel_v.z) / (leg.length * leg.length);
  leg.motor_length = leg.length;
  leg.hip_torque_actual = 0.0;
  leg.in_contact = true;
  s.support = side;
  s.stance_leg = as_stance(side);
  s.stance_start_t = s.t;
  s.unloaded_steps = 0;
}

inline void begin_swing(RobotState& s, Side side) {
  LegState& leg = s.leg(side);
  leg.in_contact = false;
  leg.motor_length = leg.length;
  leg.hip_torque_actual = 0.0;
  s.swing_start_t = s.t;
  s.swing_start_foot = {leg.foot_x - s.x, leg.foot_z - s.z};
  s.swing_start_vel = {-s.dx, -s.dz};
}

}  // namespace detail

// Contact bookkeeping: touchdown of the swing foot swaps leg roles, a stance
// leg that stays unloaded lifts off into flight.
inline RobotState fsm_update(const RobotState& state, const Terrain& terrain, const SimParams& p,
                             const FsmParams& fp) {
  (void)p;
  RobotState s = state;
  const Side sw = other(s.support);
  const LegState& swing = s.leg(sw);
  const bool swing_down = swing.foot_z <= terrain_height(terrain, swing.foot_x);
  const bool swing_ready = (s.t - s.swing_start_t) >= 0.5 * fp.swing_duration - 1e-12;

  if (swing_down && swing_ready) {
    Side old = s.support;
    detail::begin_stance(s, sw, terrain);
    detail::begin_swing(s, old);
    s.steps_taken += 1;
    return s;
  }

  if (s.in_flight()) {
    const LegState& held = s.support_leg();
    if (held.foot_z <= terrain_height(terrain, held.foot_x)) detail::begin_stance(s, s.support, terrain);
    return s;
  }

  if (s.t - s.stance_start_t >= fp.min_stance_time && s.axial_force <= 0.0) {
    s.unloaded_steps += 1;
    if (s.unloaded_steps >= fp.liftoff_steps) {
      LegState& st = s.support_leg();
      st.in_contact = false;
      st.motor_length = st.length;
      st.hip_torque_actual = 0.0;
      s.stance_leg = StanceLeg::Flight;
      s.unloaded_steps = 0;
    }
  } else {
    s.unloaded_steps = 0;
  }
  return s;
}

inline bool check_fall(const RobotState& s, const SimParams& p) {
  return std::abs(s.pitch) > p.fall_pitch || s.z < p.fall_height;
}

}  // namespace biped
