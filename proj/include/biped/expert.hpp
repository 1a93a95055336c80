#pragma once

// Feedback-based reactive walking controller: stance ground-reaction-force
// regulation of pitch and CoM height, Raibert-style foot placement, a quintic
// swing with ground-speed matching, and the inverse kinematics / inverse
// dynamics that turn all of it into motor commands.

#include <array>
#include <cmath>

#include "biped/errors.hpp"
#include "biped/sim.hpp"

namespace biped {

struct GainSet {
  double K_pt = 600.0;
  double K_dt = 60.0;
  double K_pz = 5000.0;
  double K_dz = 300.0;
  double theta_des = 0.0;
  double z_des = 0.9;
  double k = 0.2;
  double v_tgt = 0.4;
  double T = 0.34;
  double clearance = 0.10;

  friend bool operator==(const GainSet&, const GainSet&) = default;
};

inline void validate(const GainSet& g, const SimParams& p) {
  if (!(g.K_pt > 0.0)) throw InvariantViolation("K_pt", "must be positive");
  if (!(g.K_pz > 0.0)) throw InvariantViolation("K_pz", "must be positive");
  if (!(g.T > 0.0)) throw InvariantViolation("T", "must be positive");
  if (!(g.z_des > p.leg_len_min && g.z_des <= p.leg_len_max + 0.5))
    throw InvariantViolation("z_des", "outside the reachable leg length range");
  if (!std::isfinite(g.K_dt) || !std::isfinite(g.K_dz) || !std::isfinite(g.theta_des) || !std::isfinite(g.k) ||
      !std::isfinite(g.v_tgt) || !std::isfinite(g.clearance))
    throw InvariantViolation("gains", "non-finite value");
}

// Controller decision: desired ground reaction force and the foot-placement
// target (horizontal touchdown offset of the swing foot from the CoM).
struct Action {
  double F_x = 0.0;
  double F_z = 0.0;
  double x_p = 0.0;
  friend bool operator==(const Action&, const Action&) = default;
};

struct Grf {
  double F_x;
  double F_z;
};

inline Grf stance_grf(double pitch, double pitch_rate, double z, double dz, const GainSet& g) {
  return {g.K_pt * (g.theta_des - pitch) + g.K_dt * (-pitch_rate), g.K_pz * (g.z_des - z) + g.K_dz * (-dz)};
}

// The feedforward velocity is the measured one (v = v_act).
inline double foot_placement(double v_act, const GainSet& g) { return g.k * (v_act - g.v_tgt) + 0.5 * v_act * g.T; }

inline Action expert_action(const RobotState& s, const GainSet& g) {
  Grf f = stance_grf(s.pitch, s.pitch_rate, s.z, s.dz, g);
  return {f.F_x, f.F_z, foot_placement(s.dx, g)};
}

// ---------------------------------------------------------------------------
// Swing trajectory

// Two quintics in normalized time s = t / duration; coefficients are in
// metres with derivatives taken with respect to s.
struct SwingTrajectory {
  Vec2 start_foot;
  double target_x = 0.0;
  double duration = 0.0;
  std::array<double, 6> horizontal{};
  std::array<double, 6> vertical{};
};

struct SwingSetpoint {
  Vec2 pos;
  Vec2 vel;
};

// Touchdown speed of the foot (downward, hip-relative).
inline constexpr double kTouchdownSpeed = 0.2;

namespace detail {

// Quintic with position/velocity/acceleration at both ends (normalized time).
inline std::array<double, 6> quintic(double p0, double v0, double a0, double p1, double v1, double a1) {
  double d = p1 - p0;
  return {p0,
          v0,
          0.5 * a0,
          0.5 * (20.0 * d - (8.0 * v1 + 12.0 * v0) - (3.0 * a0 - a1)),
          0.5 * (-30.0 * d + (14.0 * v1 + 16.0 * v0) + (3.0 * a0 - 2.0 * a1)),
          0.5 * (12.0 * d - 6.0 * (v1 + v0) - (a0 - a1))};
}

// Quintic with start position/velocity, zero start acceleration, end
// position/velocity and a prescribed value at s = 0.5.
inline std::array<double, 6> quintic_with_midpoint(double p0, double v0, double p1, double v1, double mid) {
  double A = p1 - p0 - v0;
  double B = v1 - v0;
  double C = mid - p0 - 0.5 * v0;
  double c3 = 32.0 * C - 6.0 * A + B;
  double c4 = 5.0 * A - B - 2.0 * c3;
  double c5 = A - c3 - c4;
  return {p0, v0, 0.0, c3, c4, c5};
}

inline double poly(const std::array<double, 6>& c, double s) {
  return c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
}

inline double dpoly(const std::array<double, 6>& c, double s) {
  return c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
}

}  // namespace detail

// Swing from the current foot (hip-relative) to x_p, arriving with the
// horizontal velocity that keeps the foot still relative to the ground and
// descending at kTouchdownSpeed onto the expected terrain height. The apex
// sits `clearance` above the straight line between the end points.
inline SwingTrajectory plan_swing(Vec2 current_foot, Vec2 current_vel, double x_p, double v_act,
                                  double terrain_h_rel, double duration, double clearance) {
  if (!(duration > 0.0)) throw InvalidArgument("plan_swing: duration must be positive");
  SwingTrajectory tr;
  tr.start_foot = current_foot;
  tr.target_x = x_p;
  tr.duration = duration;
  tr.horizontal = detail::quintic(current_foot.x, current_vel.x * duration, 0.0, x_p, -v_act * duration, 0.0);
  double mid = 0.5 * (current_foot.z + terrain_h_rel) + clearance;
  tr.vertical = detail::quintic_with_midpoint(current_foot.z, current_vel.z * duration, terrain_h_rel,
                                              -kTouchdownSpeed * duration, mid);
  return tr;
}

inline SwingTrajectory plan_swing(Vec2 current_foot, double x_p, double v_act, double terrain_h_rel,
                                  const GainSet& g) {
  return plan_swing(current_foot, {0.0, 0.0}, x_p, v_act, terrain_h_rel, g.T, g.clearance);
}

inline SwingSetpoint swing_setpoint(const SwingTrajectory& tr, double t) {
  double s = t / tr.duration;
  if (s > 1.0) s = 1.0;
  if (s < 0.0) s = 0.0;
  double inv = 1.0 / tr.duration;
  return {{detail::poly(tr.horizontal, s), detail::poly(tr.vertical, s)},
          {detail::dpoly(tr.horizontal, s) * inv, detail::dpoly(tr.vertical, s) * inv}};
}

// ---------------------------------------------------------------------------
// Kinematics and dynamics

struct LegCoords {
  double angle = 0.0;
  double length = 0.0;
  bool out_of_reach = false;
};

inline LegCoords inverse_kinematics(Vec2 foot_rel_hip, const SimParams& p) {
  LegCoords c;
  c.length = foot_rel_hip.norm();
  c.angle = std::atan2(foot_rel_hip.x, -foot_rel_hip.z);
  if (c.length < p.leg_len_min || c.length > p.leg_len_max) {
    c.out_of_reach = true;
    c.length = detail::clamp(c.length, p.leg_len_min, p.leg_len_max);
  }
  return c;
}

// Joint rates that realise a hip-relative foot velocity at a given foot point.
inline std::pair<double, double> leg_rates(Vec2 foot_rel_hip, Vec2 vel) {
  double r2 = foot_rel_hip.dot(foot_rel_hip);
  double r = std::sqrt(r2);
  double length_rate = foot_rel_hip.dot(vel) / r;
  double angle_rate = (-foot_rel_hip.z * vel.x + foot_rel_hip.x * vel.z) / r2;
  return {angle_rate, length_rate};
}

struct StanceCommand {
  double motor_length = 0.0;
  double hip_torque = 0.0;
  double axial_force = 0.0;  // desired, after saturation of the GRF
};

// Desired GRF -> series-spring motor set point and hip torque.
inline StanceCommand inverse_dynamics(double F_x, double F_z, double angle, double length, double length_rate,
                                      const SimParams& p) {
  F_z = std::max(F_z, 0.0);
  double lim = p.friction_mu * F_z;
  F_x = detail::clamp(F_x, -lim, lim);
  double c = std::cos(angle), s = std::sin(angle);
  StanceCommand out;
  out.axial_force = F_z * c - F_x * s;
  out.hip_torque = detail::clamp(length * (F_x * c + F_z * s), -p.torque_max, p.torque_max);
  out.motor_length = length + (out.axial_force + p.spring_d * length_rate) / p.spring_k;
  return out;
}

// Height the swing planner aims for: the current foothold.
inline double expected_ground(const RobotState& s, const Terrain& terrain) {
  const LegState& st = s.support_leg();
  return st.in_contact ? st.pinned_z : terrain_height(terrain, st.foot_x);
}

// Everything after the policy: inverse dynamics for the stance leg, swing
// re-planning toward the latest x_p and inverse kinematics for the swing leg.
inline MotorCommand to_motor_command(const RobotState& s, const Action& a, const GainSet& g, const SimParams& p,
                                     const Terrain& terrain) {
  MotorCommand cmd;
  const LegState& st = s.support_leg();
  if (!s.in_flight()) {
    StanceCommand sc = inverse_dynamics(a.F_x, a.F_z, st.angle, st.length, st.length_rate, p);
    cmd.stance_motor_length = sc.motor_length;
    cmd.stance_hip_torque = sc.hip_torque;
  } else {
    cmd.stance_motor_length = st.motor_length;
    cmd.stance_hip_torque = 0.0;
  }

  double t_sw = s.t - s.swing_start_t;
  // Blind walking: the next foothold is expected at the current one's height.
  double ground_rel = expected_ground(s, terrain) - s.z;
  SwingTrajectory tr = plan_swing(s.swing_start_foot, s.swing_start_vel, a.x_p, s.dx, ground_rel, g.T, g.clearance);
  double t_eval = t_sw + p.dt;
  SwingSetpoint sp = swing_setpoint(tr, t_eval);
  LegCoords ik = inverse_kinematics(sp.pos, p);
  auto [angle_rate, length_rate] = leg_rates(sp.pos, sp.vel);
  cmd.swing_angle_target = ik.angle;
  cmd.swing_length_target = ik.length;
  cmd.swing_angle_rate_target = angle_rate;
  cmd.swing_length_rate_target = ik.out_of_reach ? 0.0 : length_rate;
  return cmd;
}

}  // namespace biped
