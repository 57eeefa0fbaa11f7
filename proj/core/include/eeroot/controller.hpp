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

#pragma once

#include <array>
#include <cstdint>

#include "eeroot/config.hpp"
#include "eeroot/hand_state.hpp"
#include "eeroot/impedance.hpp"
#include "eeroot/kinematics.hpp"
#include "eeroot/types.hpp"

namespace eeroot {

/// Per-EE contact forces, indexed by Side.
using ContactForces = std::array<ExternalForce, 2>;

struct ControllerState {
  RootPose root;
  JointVector q = JointVector::Zero();
  std::array<Vec3, 2> offset = {Vec3::Zero(), Vec3::Zero()};  // filtered K_p^-1 f
  EeRootCommand command;  // last command, held until replaced
  std::uint64_t tick = 0;
};

/// Analytic whole-body controller consuming EE-root commands at the control rate:
/// saturated-P root tracking, compliant target shifting and one rate-limited IK
/// step per tick. Stateless apart from its configuration.
class Controller {
 public:
  explicit Controller(const Config& cfg = Config{});

  const Config& config() const { return cfg_; }
  const RobotModel& model() const { return model_; }

  /// State at rest with the held command equal to the current EE poses.
  ControllerState initial_state(const RootPose& root, const JointVector& q) const;
  ControllerState initial_state(const RootPose& root) const {
    return initial_state(root, model_.nominal_configuration());
  }

  /// Advances one timestep. Throws NonFiniteInput.
  ControllerState step(const ControllerState& state, const EeRootCommand& cmd,
                       const ContactForces& forces = {}) const;
  /// Advances one timestep on the held command.
  ControllerState step(const ControllerState& state, const ContactForces& forces = {}) const {
    return step(state, state.command, forces);
  }

  /// Root after one saturated proportional step toward `target`.
  RootPose track_root(const RootPose& current, const RootPose& target) const;

  /// World-frame EE targets of the held command, including compliant offsets.
  EePoses ee_targets(const ControllerState& state) const;
  /// World-frame EE targets of the held command without compliance.
  EePoses reference_targets(const ControllerState& state) const;
  EePoses ee_poses(const ControllerState& state) const;

  /// Command with the canonical hand targets and the held root target.
  EeRootCommand hold_posture(const ControllerState& state, const HandState& hands) const;

 private:
  Config cfg_;
  RobotModel model_;
  IkOptions ik_;
  double filter_alpha_;
};

}  // namespace eeroot
