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

#include "eeroot/controller.hpp"

#include <algorithm>
#include <cmath>

#include "eeroot/errors.hpp"

namespace eeroot {

Controller::Controller(const Config& cfg)
    : cfg_(cfg), model_(cfg.robot), ik_(IkOptions::from_config(cfg)), filter_alpha_(1.0) {
  cfg_.validate();
  ik_.root_assist = false;
  const auto& c = cfg_.compliance;
  if (c.filter_enabled && c.filter_time_constant > 0.0) {
    filter_alpha_ = 1.0 - std::exp(-cfg_.timestep / c.filter_time_constant);
  }
}

ControllerState Controller::initial_state(const RootPose& root, const JointVector& q) const {
  ControllerState s;
  s.root = root;
  s.q = model_.clamp(q);
  s.command.root = root;
  const EePoses ee = forward_kinematics(model_, root, s.q);
  s.command.ee_left = EeTarget::from_pose(world_to_ee(root, ee.left));
  s.command.ee_right = EeTarget::from_pose(world_to_ee(root, ee.right));
  return s;
}

RootPose Controller::track_root(const RootPose& current, const RootPose& target) const {
  const RootLimits& rl = cfg_.root;
  const double dt = cfg_.timestep;
  Eigen::Vector2d v = rl.gain * Eigen::Vector2d(target.x - current.x, target.y - current.y);
  const double speed = v.norm();
  if (speed > rl.max_planar_speed) v *= rl.max_planar_speed / speed;
  const double vz = std::clamp(rl.gain * (target.z - current.z), -rl.max_vertical_speed,
                               rl.max_vertical_speed);
  const double wz = std::clamp(rl.gain * wrap_angle(target.yaw - current.yaw), -rl.max_yaw_rate,
                               rl.max_yaw_rate);
  RootPose next = current;
  next.x += v.x() * dt;
  next.y += v.y() * dt;
  next.z = std::clamp(current.z + vz * dt, rl.z_min, rl.z_max);
  if (wz != 0.0) next.yaw = wrap_angle(current.yaw + wz * dt);
  return next;
}

EePoses Controller::reference_targets(const ControllerState& state) const {
  return {ee_to_world(state.root, state.command.ee_left.pose()),
          ee_to_world(state.root, state.command.ee_right.pose())};
}

EePoses Controller::ee_targets(const ControllerState& state) const {
  EePoses t = reference_targets(state);
  t.left.position += state.offset[0];
  t.right.position += state.offset[1];
  return t;
}

EePoses Controller::ee_poses(const ControllerState& state) const {
  return forward_kinematics(model_, state.root, state.q);
}

ControllerState Controller::step(const ControllerState& state, const EeRootCommand& cmd,
                                 const ContactForces& forces) const {
  if (!cmd.finite()) throw NonFiniteInput("controller: non-finite command");
  for (const auto& f : forces) {
    if (!f.force.allFinite()) throw NonFiniteInput("controller: non-finite external force");
  }
  ControllerState next = state;
  next.command = cmd;
  next.root = track_root(state.root, cmd.root);
  for (int i = 0; i < 2; ++i) {
    const Vec3 raw = compliant_offset(forces[i].force, cfg_.gains);
    next.offset[i] = filter_alpha_ >= 1.0 ? raw : Vec3(state.offset[i] + filter_alpha_ * (raw - state.offset[i]));
  }
  const IkStep step = dls_ik_step(model_, next.root, state.q, ee_targets(next), ik_);
  next.q = state.q + step.joints;
  ++next.tick;
  return next;
}

EeRootCommand Controller::hold_posture(const ControllerState& state, const HandState& hands) const {
  const auto [left, right] = hand_targets(hands, cfg_.hands);
  EeRootCommand cmd;
  cmd.root = state.command.root;
  cmd.ee_left = left;
  cmd.ee_right = right;
  return cmd;
}

}  // namespace eeroot
