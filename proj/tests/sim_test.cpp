#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "biped/env.hpp"
#include "biped/sim.hpp"

using namespace biped;

namespace {

RobotState flight_state(double x, double z, double dx, double dz) {
  RobotState s;
  s.x = x;
  s.z = z;
  s.dx = dx;
  s.dz = dz;
  s.stance_leg = StanceLeg::Flight;
  s.left.length = 0.8;
  s.right.length = 0.8;
  s.left.motor_length = 0.8;
  s.right.motor_length = 0.8;
  update_foot(s.left, {x, z});
  update_foot(s.right, {x, z});
  return s;
}

// Vertical left leg on flat ground at height z, spring deflected by `defl`.
RobotState stance_state(double z, double defl, const SimParams& p) {
  RobotState s;
  s.x = 0.0;
  s.z = z;
  s.stance_leg = StanceLeg::Left;
  s.support = Side::Left;
  s.left.length = z;
  s.left.motor_length = z + defl;
  s.left.pinned_x = 0.0;
  s.left.pinned_z = 0.0;
  s.left.in_contact = true;
  update_foot(s.left, {s.x, s.z});
  s.right.length = 0.7;
  s.right.motor_length = 0.7;
  update_foot(s.right, {s.x, s.z});
  (void)p;
  return s;
}

MotorCommand hold_command(const RobotState& s) {
  MotorCommand c;
  c.stance_motor_length = s.support_leg().motor_length;
  c.swing_angle_target = s.swing_leg().angle;
  c.swing_length_target = s.swing_leg().length;
  return c;
}

}  // namespace

TEST(Terrain, FlatReturnsItsHeight) {
  Terrain t{{{-100.0, 0.0}}};
  EXPECT_EQ(terrain_height(t, 5.0), 0.0);
}

TEST(Terrain, PiecewiseLookupAndLeftExtension) {
  Terrain t{{{0.0, 0.0}, {1.0, 0.05}, {2.0, -0.03}}};
  EXPECT_EQ(terrain_height(t, 1.5), 0.05);
  EXPECT_EQ(terrain_height(t, -3.0), 0.0);
  EXPECT_EQ(terrain_height(t, 1.0), 0.05);  // half-open on the left
  EXPECT_EQ(terrain_height(t, 2.0), -0.03);
  EXPECT_EQ(terrain_height(t, 1e6), -0.03);
}

TEST(Terrain, ZeroDeviationIsFlat) {
  Terrain t = generate_terrain(3, 0.0, 0.3, 0.8, 20.0);
  for (const auto& s : t.segments) EXPECT_EQ(s.height, 0.0);
}

TEST(Terrain, HeightsBoundedAndStartsFlat) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Terrain t = generate_terrain(seed, 0.10, 0.3, 0.8, 20.0);
    ASSERT_FALSE(t.segments.empty());
    EXPECT_EQ(t.segments.front().height, 0.0);
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
      EXPECT_LE(std::abs(t.segments[i].height), 0.10);
      if (i > 0) {
        double len = t.segments[i].start_x - t.segments[i - 1].start_x;
        EXPECT_GT(len, 0.0);
        EXPECT_GE(len, 0.3 - 1e-12);
        EXPECT_LE(len, 0.8 + 1e-12);
      }
    }
  }
}

TEST(Terrain, DeterministicInSeed) {
  EXPECT_EQ(generate_terrain(7, 0.1, 0.3, 0.8, 20.0), generate_terrain(7, 0.1, 0.3, 0.8, 20.0));
  EXPECT_NE(generate_terrain(7, 0.1, 0.3, 0.8, 20.0), generate_terrain(8, 0.1, 0.3, 0.8, 20.0));
}

TEST(Terrain, RejectsNegativeExtent) {
  EXPECT_THROW(generate_terrain(1, 0.1, 0.3, 0.8, -1.0), InvalidArgument);
}

TEST(Spring, ForceFormula) {
  SimParams p;
  EXPECT_EQ(axial_spring_force(0.9, 0.9, 0.0, p), 0.0);
  EXPECT_NEAR(axial_spring_force(0.91, 0.9, 0.0, p), 100.0, 1e-9);
  EXPECT_NEAR(axial_spring_force(0.89, 0.9, 0.0, p), -100.0, 1e-9);
  EXPECT_NEAR(axial_spring_force(0.9, 0.9, 0.5, p), -50.0, 1e-12);
}

TEST(Params, ValidationRejectsBadValues) {
  SimParams p;
  p.dt = -1.0;
  EXPECT_THROW(validate(p), InvariantViolation);
  p = SimParams{};
  p.leg_len_min = 1.2;
  EXPECT_THROW(validate(p), InvariantViolation);
  EXPECT_NO_THROW(validate(SimParams{}));
}

TEST(Step, BallisticFlightMatchesClosedForm) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s0 = flight_state(0.3, 5.0, 0.7, 1.2);
  RobotState s = s0;
  MotorCommand c;
  for (int n = 1; n <= 500; ++n) {
    s = step(s, c, p, flat);
    double t = n * p.dt;
    ASSERT_NEAR(s.x, s0.x + s0.dx * t, 1e-6);
    ASSERT_NEAR(s.z, s0.z + s0.dz * t - 0.5 * p.gravity * t * t, 1e-6);
  }
}

TEST(Step, FlightConservesMomentumAndEnergy) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = flight_state(0.0, 8.0, 0.5, 2.0);
  s.pitch_rate = 0.3;
  auto energy = [&](const RobotState& r) {
    return 0.5 * p.mass * (r.dx * r.dx + r.dz * r.dz) + 0.5 * p.inertia * r.pitch_rate * r.pitch_rate +
           p.mass * p.gravity * r.z;
  };
  const double e0 = energy(s), px0 = p.mass * s.dx;
  MotorCommand c;
  for (int n = 0; n < 1000; ++n) s = step(s, c, p, flat);
  EXPECT_NEAR(p.mass * s.dx, px0, 1e-9);
  EXPECT_NEAR(energy(s), e0, 1e-6 * 1.0);  // one simulated second
}

TEST(Step, StaticEquilibriumIsStationary) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(0.85, p.mass * p.gravity / p.spring_k, p);
  MotorCommand c = hold_command(s);
  for (int n = 0; n < 200; ++n) {
    RobotState next = step(s, c, p, flat);
    ASSERT_NEAR(next.x, s.x, 1e-6);
    ASSERT_NEAR(next.z, s.z, 1e-6);
    ASSERT_NEAR(next.pitch, s.pitch, 1e-6);
    s = next;
  }
  EXPECT_NEAR(s.axial_force, p.mass * p.gravity, 1e-6);
}

TEST(Step, Deterministic) {
  SimParams p;
  Terrain t = generate_terrain(2, 0.1, 0.3, 0.8, 20.0);
  GainSet g;
  RobotState s = initial_state(p, g, t, InitMode::UnloadedDrop);
  MotorCommand c = to_motor_command(s, expert_action(s, g), g, p, t);
  EXPECT_EQ(step(s, c, p, t), step(s, c, p, t));
}

TEST(Step, NonFiniteStateIsReported) {
  SimParams p;
  RobotState s = flight_state(0.0, 2.0, 0.0, 0.0);
  s.dx = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step(s, MotorCommand{}, p, Terrain::flat(0.0)), NonFiniteError);
}

TEST(Step, HardStopKeepsMinimumLength) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(p.leg_len_min + 0.001, 0.0, p);
  s.dz = -2.0;
  MotorCommand c = hold_command(s);
  s = step(s, c, p, flat);
  EXPECT_NEAR(s.left.length, p.leg_len_min, 1e-12);
  EXPECT_GE(s.dz, -1e-12);
}

TEST(Step, FullExtensionLiftsOff) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(p.leg_len_max - 0.0005, 0.0, p);
  s.dz = 1.0;
  s = step(s, hold_command(s), p, flat);
  EXPECT_TRUE(s.in_flight());
  EXPECT_LE(s.left.length, p.leg_len_max);
}

// Invariants along closed-loop expert rollouts on rough terrain.
TEST(Step, InvariantsAlongExpertRollouts) {
  EnvSpec env;
  GainSet g;
  const SimParams& p = env.params;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Terrain t = episode_terrain(env, seed);
    RobotState start = initial_state(p, g, t, env.init);
    run_episode(env, t, start, g, seed, expert_controller(g), [&](const StepView& v) {
      const RobotState& s = v.after;
      for (const LegState* leg : {&s.left, &s.right}) {
        ASSERT_GE(leg->length, p.leg_len_min - 1e-12);
        ASSERT_LE(leg->length, p.leg_len_max + 1e-12);
        ASSERT_LE(std::abs(leg->hip_torque_actual), p.torque_max);
        Vec2 u = leg_axis(leg->angle);
        ASSERT_NEAR(leg->foot_x, s.x + leg->length * u.x, 1e-12);
        ASSERT_NEAR(leg->foot_z, s.z + leg->length * u.z, 1e-12);
      }
      ASSERT_LE(std::abs(s.applied_fx), p.friction_mu * s.applied_fz + 1e-9);
      ASSERT_GE(s.applied_fz, 0.0);
      if (!s.in_flight()) {
        const LegState& st = s.support_leg();
        ASSERT_TRUE(st.in_contact);
        ASSERT_NEAR(st.foot_x, st.pinned_x, 1e-12);
        ASSERT_NEAR(st.foot_z, st.pinned_z, 1e-12);
      }
      if (!v.fell) {
        ASSERT_GT(s.z, 0.0);
      }
    });
  }
}

TEST(Step, StanceForceMapDecomposition) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    double axial = 1000.0 * u(rng), tau = 100.0 * u(rng), a = 0.5 * u(rng), L = 0.75 + 0.2 * u(rng);
    Vec2 f = stance_force(axial, tau, a, L);
    // Axial part along the foot->hip direction, torque part perpendicular.
    Vec2 axis = leg_axis(a);
    EXPECT_NEAR(-f.dot(axis), axial, 1e-9);
    EXPECT_NEAR(f.dot(leg_normal(a)) * L, tau, 1e-9);
  }
}

TEST(Fsm, TouchdownSwapsRoles) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(0.85, 0.0, p);
  s.t = 0.3;
  s.swing_start_t = 0.0;
  s.right.angle = 0.2;
  s.right.length = 0.9;
  update_foot(s.right, {s.x, s.z});
  ASSERT_LE(s.right.foot_z, 0.0);
  FsmParams fp;
  fp.swing_duration = 0.34;
  RobotState n = fsm_update(s, flat, p, fp);
  EXPECT_EQ(n.stance_leg, StanceLeg::Right);
  EXPECT_EQ(n.support, Side::Right);
  EXPECT_TRUE(n.right.in_contact);
  EXPECT_FALSE(n.left.in_contact);
  EXPECT_EQ(n.steps_taken, s.steps_taken + 1);
  EXPECT_EQ(n.right.pinned_z, 0.0);
}

TEST(Fsm, EarlySwingDoesNotTouchDown) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(0.85, 0.0, p);
  s.t = 0.1;
  s.right.length = 0.9;
  update_foot(s.right, {s.x, s.z});
  RobotState n = fsm_update(s, flat, p, FsmParams{});
  EXPECT_EQ(n.stance_leg, StanceLeg::Left);
}

TEST(Fsm, SwingFootAboveGroundKeepsRoles) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(0.85, 0.0, p);
  s.t = 0.3;
  RobotState n = fsm_update(s, flat, p, FsmParams{});
  EXPECT_EQ(n.stance_leg, s.stance_leg);
  EXPECT_EQ(n.steps_taken, s.steps_taken);
}

TEST(Fsm, SustainedTensionLiftsOff) {
  SimParams p;
  Terrain flat = Terrain::flat(0.0);
  RobotState s = stance_state(0.85, 0.0, p);
  s.t = 0.2;
  s.stance_start_t = 0.0;
  s.axial_force = -50.0;
  FsmParams fp;
  for (int i = 0; i < 4; ++i) {
    s = fsm_update(s, flat, p, fp);
    ASSERT_EQ(s.stance_leg, StanceLeg::Left);
  }
  s = fsm_update(s, flat, p, fp);
  EXPECT_EQ(s.stance_leg, StanceLeg::Flight);
}

TEST(Fsm, TensionBeforeMinimumStanceIsIgnored) {
  SimParams p;
  RobotState s = stance_state(0.85, 0.0, p);
  s.t = 0.01;
  s.stance_start_t = 0.0;
  s.axial_force = -50.0;
  for (int i = 0; i < 10; ++i) s = fsm_update(s, Terrain::flat(0.0), p, FsmParams{});
  EXPECT_EQ(s.stance_leg, StanceLeg::Left);
}

TEST(Fall, Thresholds) {
  SimParams p;
  RobotState s;
  s.pitch = 0.6;
  s.z = 0.9;
  EXPECT_TRUE(check_fall(s, p));
  s.pitch = 0.0;
  s.z = 0.45;
  EXPECT_TRUE(check_fall(s, p));
  s.pitch = 0.1;
  s.z = 0.9;
  EXPECT_FALSE(check_fall(s, p));
}

TEST(Start, UnloadedDropCarriesNoForce) {
  SimParams p;
  GainSet g;
  RobotState s = initial_state(p, g, Terrain::flat(0.0), InitMode::UnloadedDrop);
  EXPECT_TRUE(s.in_flight());
  EXPECT_LE(std::abs(s.axial_force), 1.0);
  EXPECT_EQ(s.dx, 0.0);
  EXPECT_EQ(s.dz, 0.0);
  EXPECT_NEAR(s.z - s.left.length, kStartDrop, 1e-12);
}

TEST(Start, PreloadedCarriesWeight) {
  SimParams p;
  GainSet g;
  RobotState s = initial_state(p, g, Terrain::flat(0.0), InitMode::PreloadedLowered);
  const double weight = p.mass * p.gravity;
  EXPECT_NEAR(s.axial_force, weight, 0.01 * weight);
  EXPECT_NEAR(s.left.motor_length - s.left.length, 0.0627840, 1e-7);
}
