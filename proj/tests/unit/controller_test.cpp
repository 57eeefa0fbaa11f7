// Copyright 2026 The eeroot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "eeroot/controller.hpp"
#include "eeroot/errors.hpp"
#include "eeroot/hand_state.hpp"

namespace eeroot {
namespace {

const RootPose kHome{0.0, 0.0, 0.7, 0.0};

ControllerState settled(const Controller& c, const HandState& hands, double seconds = 2.0) {
  ControllerState s = c.initial_state(kHome);
  const EeRootCommand cmd = c.hold_posture(s, hands);
  const int ticks = static_cast<int>(seconds / c.config().timestep);
  for (int i = 0; i < ticks; ++i) s = c.step(s, cmd);
  return s;
}

double position_error(const Controller& c, const ControllerState& s, Side side) {
  return (c.ee_poses(s)[side].position - c.ee_targets(s)[side].position).norm();
}

// Backward third difference, RMS over ticks and axes.
double jerk_rms(const std::vector<Vec3>& p, double dt) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t t = 3; t < p.size(); ++t) {
    const Vec3 j = (p[t] - 3 * p[t - 1] + 3 * p[t - 2] - p[t - 3]) / (dt * dt * dt);
    sum += j.squaredNorm();
    n += 3;
  }
  return std::sqrt(sum / n);
}

TEST(HandState, CanonicalTargetsAndFlags) {
  const HandStateTable table;
  const auto [l, r] = hand_targets(HandState::rest(), table);
  EXPECT_EQ(l.position, table.rest);
  EXPECT_EQ(r.position, Vec3(table.rest.x(), -table.rest.y(), table.rest.z()));
  EXPECT_TRUE(HandState::rest().locomotion_safe());
  EXPECT_TRUE(HandState::hold().locomotion_safe());
  EXPECT_FALSE(HandState::ready().locomotion_safe());
  EXPECT_FALSE(HandState::grasp(0.3).locomotion_safe());
  for (const HandState& h : {HandState::rest(), HandState::hold(), HandState::ready(),
                             HandState::grasp(0.25, 0.05)}) {
    const auto [a, b] = hand_targets(h, table);
    EXPECT_EQ(a.position.x(), b.position.x());
    EXPECT_EQ(a.position.y(), -b.position.y());
    EXPECT_EQ(a.position.z(), b.position.z());
  }
}

TEST(HandState, GraspSeparation) {
  const HandStateTable table;
  const auto [l, r] = hand_targets(HandState::grasp(0.3), table);
  EXPECT_NEAR(l.position.y() - r.position.y(), 0.3 - 2 * table.squeeze_margin, 1e-15);
}

TEST(HandState, ParseNames) {
  EXPECT_EQ(HandState::parse("ready"), HandState::ready());
  EXPECT_EQ(HandState::parse("REST").name(), "REST");
  EXPECT_EQ(HandState::parse("Grasp", 0.2), HandState::grasp(0.2));
  EXPECT_THROW(HandState::parse("WAVE"), UnknownState);
}

TEST(Controller, HoldPostureKeepsRootTarget) {
  const Controller c;
  ControllerState s = c.initial_state(kHome);
  s.command.root = {1.0, 2.0, 0.6, 0.3};
  const EeRootCommand cmd = c.hold_posture(s, HandState::ready());
  EXPECT_EQ(cmd.root, s.command.root);
  EXPECT_EQ(cmd.ee_left.position, c.config().hands.ready);
}

TEST(Controller, FixedPoint) {
  const Controller c;
  const ControllerState s = settled(c, HandState::hold());
  EeRootCommand cmd;
  cmd.root = s.root;
  const EePoses ee = c.ee_poses(s);
  cmd.ee_left = EeTarget::from_pose(world_to_ee(s.root, ee.left));
  cmd.ee_right = EeTarget::from_pose(world_to_ee(s.root, ee.right));
  const ControllerState n = c.step(s, cmd);
  EXPECT_LT((n.q - s.q).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(n.root, s.root);
  EXPECT_EQ(n.tick, s.tick + 1);
}

TEST(Controller, RejectsNonFinite) {
  const Controller c;
  const ControllerState s = c.initial_state(kHome);
  EeRootCommand cmd = s.command;
  cmd.root.x = std::nan("");
  EXPECT_THROW(c.step(s, cmd), NonFiniteInput);
  ContactForces f;
  f[0].force.z() = INFINITY;
  EXPECT_THROW(c.step(s, s.command, f), NonFiniteInput);
}

TEST(Controller, SaturatedRootSettling) {
  const Controller c;
  ControllerState s = settled(c, HandState::rest());
  EeRootCommand cmd = s.command;
  cmd.root.x += 1.0;
  const double limit_time = 1.0 / 0.8 + 0.5;
  double overshoot = 0.0;
  double reached = -1.0;
  const double dt = c.config().timestep;
  for (int i = 1; i <= 200; ++i) {
    const double vx = (c.step(s, cmd).root.x - s.root.x) / dt;
    EXPECT_LE(std::abs(vx), 0.8 + 1e-12);
    s = c.step(s, cmd);
    overshoot = std::max(overshoot, s.root.x - cmd.root.x);
    if (reached < 0 && std::abs(s.root.x - cmd.root.x) < 1e-3) reached = i * dt;
  }
  EXPECT_GT(reached, 0.0);
  EXPECT_LE(reached, limit_time);
  EXPECT_LT(overshoot, 0.02);
}

TEST(Controller, YawAndHeightRespectLimits) {
  const Controller c;
  ControllerState s = settled(c, HandState::rest(), 0.5);
  EeRootCommand cmd = s.command;
  cmd.root.yaw = 3.0;
  cmd.root.z = 0.1;
  const double dt = c.config().timestep;
  for (int i = 0; i < 300; ++i) {
    const ControllerState n = c.step(s, cmd);
    EXPECT_LE(std::abs(wrap_angle(n.root.yaw - s.root.yaw)), 1.5 * dt + 1e-12);
    EXPECT_LE(std::abs(n.root.z - s.root.z), 0.3 * dt + 1e-12);
    EXPECT_GE(n.root.z, c.config().root.z_min);
    s = n;
  }
  EXPECT_NEAR(s.root.yaw, 3.0, 1e-6);
  EXPECT_DOUBLE_EQ(s.root.z, c.config().root.z_min);
}

TEST(Controller, EeStepTracksAndForceDoesNotDoubleJerk) {
  const Controller c;
  const ControllerState start = settled(c, HandState::hold());
  EeRootCommand cmd = start.command;
  cmd.ee_left.position += Vec3(0.0, 0.12, 0.16);  // 0.2 m
  const double dt = c.config().timestep;
  auto rollout = [&](const Vec3& force, double* error_at_1s) {
    ControllerState s = start;
    ContactForces f;
    f[0].force = force;
    std::vector<Vec3> path;
    for (int i = 0; i < 100; ++i) {
      s = c.step(s, cmd, f);
      path.push_back(c.ee_poses(s).left.position);
    }
    *error_at_1s = position_error(c, s, Side::kLeft);
    return jerk_rms(path, dt);
  };
  double e0 = 0, e1 = 0;
  const double j0 = rollout(Vec3::Zero(), &e0);
  const double j1 = rollout(Vec3(4.0, 0.0, -3.0), &e1);
  EXPECT_LE(e0, 0.005);
  EXPECT_LE(e1, 0.005);
  EXPECT_TRUE(std::isfinite(j0));
  EXPECT_TRUE(std::isfinite(j1));
  EXPECT_LE(j1, 2.0 * j0);
}

TEST(Controller, SteadyStateOffsetEqualsComplianceWithinMillimetre) {
  const Controller c;
  ControllerState s = settled(c, HandState::hold());
  ContactForces f;
  f[0].force = {5.0, -2.0, -3.0};
  f[1].force = {0.0, 4.0, 1.0};
  for (int i = 0; i < 150; ++i) s = c.step(s, s.command, f);
  const EePoses ref = c.reference_targets(s);
  const EePoses actual = c.ee_poses(s);
  const Mat3 kp = c.config().gains.stiffness();
  EXPECT_LT(((actual.left.position - ref.left.position) - kp.inverse() * f[0].force).norm(), 1e-3);
  EXPECT_LT(((actual.right.position - ref.right.position) - kp.inverse() * f[1].force).norm(), 1e-3);
}

TEST(Controller, WallEquilibrium) {
  const Controller c;
  const double d = 0.05, kp = 100.0, ks = 500.0;
  ControllerState s = settled(c, HandState::hold());
  const Vec3 target = c.reference_targets(s).left.position;
  const Plane wall{target - Vec3(d, 0, 0), {-1.0, 0.0, 0.0}};
  for (int i = 0; i < 100; ++i) {
    const EePoses ee = c.ee_poses(s);
    ContactForces f{spring_contact_force(ee.left.position, wall, ks),
                    spring_contact_force(ee.right.position, wall, ks)};
    s = c.step(s, s.command, f);
  }
  const double p = -wall.signed_distance(c.ee_poses(s).left.position);
  EXPECT_NEAR(p, d * kp / (kp + ks), 1e-3);
}

TEST(Controller, RateContractUnderSkillRateCommands) {
  const Controller c;
  ControllerState s = settled(c, HandState::rest(), 0.5);
  std::mt19937_64 rng(55);
  const HandState states[] = {HandState::rest(), HandState::hold(), HandState::ready(),
                              HandState::grasp(0.3)};
  std::uniform_int_distribution<int> pick(0, 3);
  const double max_step = c.config().robot.joint_velocity_limit * c.config().timestep;
  EeRootCommand cmd = s.command;
  for (int i = 0; i < 50 * 20; ++i) {
    if (i % 10 == 0 || i % 10 == 3 || i % 10 == 7) {  // 15 Hz on a 50 Hz clock
      cmd = c.hold_posture(s, states[pick(rng)]);
    }
    const ControllerState n = c.step(s, cmd);
    ASSERT_LE((n.q - s.q).cwiseAbs().maxCoeff(), max_step + 1e-12);
    ASSERT_TRUE(c.model().within_limits(n.q));
    s = n;
  }
}

TEST(Controller, DeterministicReplay) {
  const Controller c;
  auto run = [&] {
    ControllerState s = c.initial_state(kHome);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int i = 0; i < 300; ++i) {
      EeRootCommand cmd = c.hold_posture(s, i < 150 ? HandState::ready() : HandState::hold());
      cmd.root.x = 0.5;
      ContactForces f;
      f[0].force = {u(rng), u(rng), u(rng)};
      s = c.step(s, cmd, f);
    }
    return s;
  };
  const ControllerState a = run();
  const ControllerState b = run();
  EXPECT_EQ(a.q, b.q);
  EXPECT_EQ(a.root, b.root);
}

}  // namespace
}  // namespace eeroot
