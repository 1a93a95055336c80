#pragma once

#include <cmath>

#include "biped/errors.hpp"

namespace biped {

struct RewardConfig {
  double C1 = 1.0;
  double C2 = 0.3;
  double C3 = 0.01;
  double v_tgt = 0.4;
  // Episode cap in steps; the fall penalty is C3 * T_max_steps.
  int T_max_steps = 10000;
  // Torque penalty weight (per N^2 per step); 0 disables it.
  double torque_penalty_C4 = 0.0;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

// Weight that puts hip torque (N m) on the same footing as axial force (N).
inline constexpr double kTorquePenaltyScale = 25.0;
// C4 used when the torque-penalty variant is switched on without a value.
inline constexpr double kDefaultTorquePenaltyC4 = 1e-6;

inline void validate(const RewardConfig& c) {
  if (!(c.C1 >= 0.0)) throw InvariantViolation("C1", "must be non-negative");
  if (!(c.C2 >= 0.0)) throw InvariantViolation("C2", "must be non-negative");
  if (!(c.C3 >= 0.0)) throw InvariantViolation("C3", "must be non-negative");
  if (!(c.T_max_steps > 0)) throw InvariantViolation("T_max_steps", "must be positive");
  if (!(c.torque_penalty_C4 >= 0.0)) throw InvariantViolation("torque_penalty_C4", "must be non-negative");
}

// One-off penalty charged at the step the robot falls.
inline double fall_penalty(const RewardConfig& c) { return -c.C3 * static_cast<double>(c.T_max_steps); }

inline double reward(double v_act, double pitch_rate, bool fell, const RewardConfig& c) {
  if (fell) return fall_penalty(c);
  double dv = v_act - c.v_tgt;
  return -c.C1 * dv * dv - c.C2 * pitch_rate * pitch_rate + 1.0;
}

inline double reward_torque_penalty(double base, double stance_axial, double hip_torque, const RewardConfig& c) {
  return base - c.torque_penalty_C4 * (stance_axial * stance_axial + kTorquePenaltyScale * hip_torque * hip_torque);
}

}  // namespace biped
