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

#include "eeroot/geometry.hpp"

#include <cmath>
#include <limits>

namespace eeroot {

namespace {

Eigen::Matrix2d planar_rotation(double yaw) {
  return Eigen::Rotation2Dd(yaw).toRotationMatrix();
}

}  // namespace

Vec3 Obb::to_local(const Vec3& world) const {
  const Eigen::Vector2d d = planar_rotation(-yaw) * (world - center).head<2>();
  return {d.x(), d.y(), world.z() - center.z()};
}

Vec3 Obb::to_world(const Vec3& local) const {
  const Eigen::Vector2d d = planar_rotation(yaw) * local.head<2>();
  return center + Vec3(d.x(), d.y(), local.z());
}

Vec3 Obb::axis_x() const { return {std::cos(yaw), std::sin(yaw), 0.0}; }
Vec3 Obb::axis_y() const { return {-std::sin(yaw), std::cos(yaw), 0.0}; }

bool Obb::contains(const Vec3& p) const {
  return (to_local(p).cwiseAbs() - half_extents).maxCoeff() <= 0.0;
}

bool Obb::footprint_contains(double x, double y, double margin) const {
  const Vec3 l = to_local({x, y, center.z()});
  return std::abs(l.x()) <= half_extents.x() + margin && std::abs(l.y()) <= half_extents.y() + margin;
}

std::array<Eigen::Vector2d, 4> Obb::footprint() const {
  std::array<Eigen::Vector2d, 4> out;
  const double sx[4] = {1, -1, -1, 1};
  const double sy[4] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    out[i] = to_world({sx[i] * half_extents.x(), sy[i] * half_extents.y(), 0.0}).head<2>();
  }
  return out;
}

std::pair<double, Vec3> Obb::penetration(const Vec3& p) const {
  const Vec3 l = to_local(p);
  const Vec3 slack = half_extents - l.cwiseAbs();
  if (slack.minCoeff() <= 0.0) return {0.0, Vec3::Zero()};
  int axis = 0;
  slack.minCoeff(&axis);
  Vec3 local_normal = Vec3::Zero();
  local_normal[axis] = l[axis] >= 0.0 ? 1.0 : -1.0;
  const Eigen::Vector2d n2 = planar_rotation(yaw) * local_normal.head<2>();
  return {slack[axis], Vec3(n2.x(), n2.y(), local_normal.z())};
}

bool footprints_overlap(const Obb& a, const Obb& b, double margin) {
  const auto ca = a.footprint();
  const auto cb = b.footprint();
  const std::array<Eigen::Vector2d, 4> axes = {a.axis_x().head<2>(), a.axis_y().head<2>(),
                                               b.axis_x().head<2>(), b.axis_y().head<2>()};
  for (const auto& axis : axes) {
    double amin = std::numeric_limits<double>::infinity(), amax = -amin;
    double bmin = amin, bmax = -amin;
    for (const auto& c : ca) {
      amin = std::min(amin, axis.dot(c));
      amax = std::max(amax, axis.dot(c));
    }
    for (const auto& c : cb) {
      bmin = std::min(bmin, axis.dot(c));
      bmax = std::max(bmax, axis.dot(c));
    }
    if (amax + margin < bmin || bmax + margin < amin) return false;
  }
  return true;
}

bool point_in_polygon(const Eigen::Vector2d& p, std::span<const Eigen::Vector2d> polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = polygon[i];
    const auto& b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

}  // namespace eeroot
