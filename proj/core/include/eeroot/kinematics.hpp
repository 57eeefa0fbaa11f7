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
#include <utility>

#include <Eigen/Core>

#include "eeroot/config.hpp"
#include "eeroot/types.hpp"

namespace eeroot {

inline constexpr int kArmDofs = 7;
inline constexpr int kArmJoints = 2 * kArmDofs;
inline constexpr int kRootDofs = 4;

/// Arm joint angles; left arm in 0..6, right arm in 7..13.
using JointVector = Eigen::Matrix<double, kArmJoints, 1>;
using ArmJacobian = Eigen::Matrix<double, 6, kRootDofs + kArmDofs>;
using RootDelta = Eigen::Vector4d;  // dx, dy, dz, dyaw

struct ArmJoint {
  Pose3 parent_offset;  // fixed transform from the previous frame
  Vec3 axis;            // rotation axis in the joint frame
};

/// Kinematic floating base carrying two 7-DoF arms. Per arm the joints are
/// shoulder pitch/roll/yaw, elbow pitch, wrist roll/pitch/yaw; at q = 0 the arm
/// hangs straight down. Immutable after construction.
class RobotModel {
 public:
  RobotModel() : RobotModel(RobotGeometry{}) {}
  explicit RobotModel(const RobotGeometry& geometry);

  const RobotGeometry& geometry() const { return geometry_; }
  const std::array<ArmJoint, kArmDofs>& chain(Side side) const {
    return chains_[static_cast<int>(side)];
  }
  const Pose3& tool_offset() const { return tool_; }

  double reach() const { return geometry_.upper_arm + geometry_.forearm + geometry_.hand; }
  double joint_limit() const { return geometry_.joint_limit; }
  double joint_velocity_limit() const { return geometry_.joint_velocity_limit; }

  /// Shoulder mount in the root frame.
  Vec3 shoulder_in_root(Side side) const;
  Vec3 shoulder_in_world(const RootPose& root, Side side) const;

  /// Bent-elbow configuration used to seed solvers away from the straight-arm singularity.
  JointVector nominal_configuration() const;

  JointVector clamp(const JointVector& q) const;
  bool within_limits(const JointVector& q, double tol = 0.0) const;

 private:
  RobotGeometry geometry_;
  std::array<std::array<ArmJoint, kArmDofs>, 2> chains_;
  Pose3 tool_;
};

struct EePoses {
  Pose3 left;
  Pose3 right;

  const Pose3& operator[](Side s) const { return s == Side::kLeft ? left : right; }
  Pose3& operator[](Side s) { return s == Side::kLeft ? left : right; }
};

/// World-frame end-effector poses.
EePoses forward_kinematics(const RobotModel& model, const RootPose& root, const JointVector& q);

/// World pose of one EE.
Pose3 forward_kinematics(const RobotModel& model, const RootPose& root, const JointVector& q,
                         Side side);

/// Geometric Jacobian of one EE (rows: linear velocity, angular velocity; world
/// frame) with respect to root x, y, z, yaw and the arm's 7 joints.
ArmJacobian jacobian(const RobotModel& model, const RootPose& root, const JointVector& q,
                     Side side);

/// Rotation-vector orientation error log(R_target * R_current^T), world frame.
Vec3 orientation_error(const Quat& target, const Quat& current);

struct IkOptions {
  double damping = 0.05;
  double position_weight = 1.0;
  double orientation_weight = 0.5;
  bool root_assist = false;
  /// Step limits are joint_velocity_limit * dt and root velocity limits * dt.
  double dt = 0.02;
  RootLimits root_limits{};
  bool clamp_velocity = true;

  static IkOptions from_config(const Config& cfg);
};

struct IkStep {
  RootDelta root = RootDelta::Zero();
  JointVector joints = JointVector::Zero();
};

/// Weighted stacked task error (12 rows: left pos, left rot, right pos, right rot).
Eigen::Matrix<double, 12, 1> task_error(const RobotModel& model, const RootPose& root,
                                        const JointVector& q, const EePoses& targets);

/// Unclamped damped-least-squares direction J^T (J J^T + lambda^2 I)^-1 e on the
/// weighted stacked error. Root columns are present only with root_assist.
IkStep dls_direction(const RobotModel& model, const RootPose& root, const JointVector& q,
                     const EePoses& targets, const IkOptions& options);

/// One damped-least-squares step, scaled to the velocity limits and clamped so
/// that q + step.joints stays within the joint limits. Throws NonFiniteInput.
IkStep dls_ik_step(const RobotModel& model, const RootPose& root, const JointVector& q,
                   const EePoses& targets, const IkOptions& options);

RootPose apply(const RootPose& root, const RootDelta& delta);

struct IkResult {
  RootPose root;
  JointVector q;
  int iterations = 0;
  int restarts = 0;
  double position_error = 0.0;     // max over both arms, m
  double orientation_error = 0.0;  // max over both arms, rad
  bool converged = false;
};

/// Stagnation restarts for solve_ik. An arm whose error (position + 0.1 * rotation)
/// fails to drop below `ratio` of its value `window` steps earlier is re-seeded
/// with the best of `samples` random in-limit configurations ranked by pose error.
/// Restart sampling costs no iterations; the generator is seeded per call.
struct IkRestarts {
  bool enabled = true;
  int window = 5;
  double ratio = 0.9;
  int samples = 64;
  std::uint64_t seed = 99;
};

/// Iterates dls_ik_step until both arms are within the given tolerances.
IkResult solve_ik(const RobotModel& model, const RootPose& root, const JointVector& q0,
                  const EePoses& targets, const IkOptions& options, int max_iterations,
                  double position_tol = 1e-3, double orientation_tol = 1e-2,
                  const IkRestarts& restarts = {});

}  // namespace eeroot
