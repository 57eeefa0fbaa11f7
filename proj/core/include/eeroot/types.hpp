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
#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace eeroot {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Rotation vector (axis * angle) of a unit quaternion, angle in [0, pi].
Vec3 to_rotation_vector(const Quat& q);
Quat from_rotation_vector(const Vec3& rv);

/// Geodesic angle between two orientations, in [0, pi].
double geodesic_angle(const Quat& a, const Quat& b);

/// Rigid transform. Orientation is kept as a unit quaternion.
struct Pose3 {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  static Pose3 identity() { return {}; }
  static Pose3 from_matrix(const Eigen::Matrix4d& m);

  Pose3 inverse() const;
  Eigen::Matrix4d matrix() const;
  Vec3 transform_point(const Vec3& p) const { return orientation * p + position; }
};

/// parent ∘ child.
Pose3 compose(const Pose3& parent, const Pose3& child);

/// Floating-base pose: world-frame position of the pelvis plus heading.
struct RootPose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  Vec3 position() const { return {x, y, z}; }
  Pose3 pose() const;

  friend bool operator==(const RootPose&, const RootPose&) = default;
};

Pose3 ee_to_world(const RootPose& root, const Pose3& ee_in_root);
Pose3 world_to_ee(const RootPose& root, const Pose3& ee_in_world);

/// End-effector target in the root frame, stored exactly as it is serialized:
/// position plus rotation vector.
struct EeTarget {
  Vec3 position = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();

  static EeTarget from_pose(const Pose3& p);
  Pose3 pose() const;

  friend bool operator==(const EeTarget& a, const EeTarget& b) {
    return a.position == b.position && a.rotation == b.rotation;
  }
};

/// 16-number task-space command: root (x, y, z, yaw) followed by the left and
/// right end-effector targets (position, rotation vector) in the root frame.
struct EeRootCommand {
  static constexpr std::size_t kSize = 16;

  RootPose root;
  EeTarget ee_left;
  EeTarget ee_right;

  std::array<double, kSize> encode() const;
  static EeRootCommand decode(std::span<const double, kSize> flat);
  bool finite() const;

  friend bool operator==(const EeRootCommand&, const EeRootCommand&) = default;
};

enum class Side { kLeft = 0, kRight = 1 };

}  // namespace eeroot
