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

#include "eeroot/types.hpp"

#include <cmath>
#include <numbers>

namespace eeroot {

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  if (angle > -kPi && angle <= kPi) return angle;
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

Vec3 to_rotation_vector(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double s = q.vec().norm();
  if (s < 1e-12) {
    // small-angle: theta ~ 2 s, axis * theta ~ 2 * vec
    return 2.0 * q.vec();
  }
  const double angle = 2.0 * std::atan2(s, q.w());
  return q.vec() * (angle / s);
}

Quat from_rotation_vector(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle < 1e-12) {
    Quat q(1.0, 0.5 * rv.x(), 0.5 * rv.y(), 0.5 * rv.z());
    return q.normalized();
  }
  return Quat(Eigen::AngleAxisd(angle, rv / angle));
}

double geodesic_angle(const Quat& a, const Quat& b) {
  const Quat rel = a.conjugate() * b;
  const double s = rel.vec().norm();
  return 2.0 * std::atan2(s, std::abs(rel.w()));
}

Pose3 Pose3::from_matrix(const Eigen::Matrix4d& m) {
  Pose3 p;
  p.position = m.block<3, 1>(0, 3);
  p.orientation = Quat(Mat3(m.block<3, 3>(0, 0))).normalized();
  return p;
}

Pose3 Pose3::inverse() const {
  Pose3 inv;
  inv.orientation = orientation.conjugate();
  inv.position = -(inv.orientation * position);
  return inv;
}

Eigen::Matrix4d Pose3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 3>(0, 0) = orientation.toRotationMatrix();
  m.block<3, 1>(0, 3) = position;
  return m;
}

Pose3 compose(const Pose3& parent, const Pose3& child) {
  Pose3 out;
  out.position = parent.orientation * child.position + parent.position;
  out.orientation = (parent.orientation * child.orientation).normalized();
  return out;
}

Pose3 RootPose::pose() const {
  Pose3 p;
  p.position = position();
  p.orientation = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
  return p;
}

Pose3 ee_to_world(const RootPose& root, const Pose3& ee_in_root) {
  return compose(root.pose(), ee_in_root);
}

Pose3 world_to_ee(const RootPose& root, const Pose3& ee_in_world) {
  return compose(root.pose().inverse(), ee_in_world);
}

EeTarget EeTarget::from_pose(const Pose3& p) {
  return {p.position, to_rotation_vector(p.orientation)};
}

Pose3 EeTarget::pose() const { return {position, from_rotation_vector(rotation)}; }

std::array<double, EeRootCommand::kSize> EeRootCommand::encode() const {
  return {root.x,
          root.y,
          root.z,
          root.yaw,
          ee_left.position.x(),
          ee_left.position.y(),
          ee_left.position.z(),
          ee_left.rotation.x(),
          ee_left.rotation.y(),
          ee_left.rotation.z(),
          ee_right.position.x(),
          ee_right.position.y(),
          ee_right.position.z(),
          ee_right.rotation.x(),
          ee_right.rotation.y(),
          ee_right.rotation.z()};
}

EeRootCommand EeRootCommand::decode(std::span<const double, kSize> f) {
  EeRootCommand c;
  c.root = {f[0], f[1], f[2], f[3]};
  c.ee_left.position = {f[4], f[5], f[6]};
  c.ee_left.rotation = {f[7], f[8], f[9]};
  c.ee_right.position = {f[10], f[11], f[12]};
  c.ee_right.rotation = {f[13], f[14], f[15]};
  return c;
}

bool EeRootCommand::finite() const {
  for (double v : encode()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace eeroot
