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
#include <utility>

#include "eeroot/types.hpp"

namespace eeroot {

/// Half-space boundary; `normal` is unit and points out of the solid.
struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

/// Box rotated about world z.
struct Obb {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);
  double yaw = 0.0;

  Vec3 to_local(const Vec3& world) const;
  Vec3 to_world(const Vec3& local) const;
  /// Local +x / +y axes in the world frame.
  Vec3 axis_x() const;
  Vec3 axis_y() const;

  double bottom() const { return center.z() - half_extents.z(); }
  double top() const { return center.z() + half_extents.z(); }

  bool contains(const Vec3& p) const;
  /// Planar point-in-footprint test (rotated rectangle, z ignored).
  bool footprint_contains(double x, double y, double margin = 0.0) const;
  /// Footprint corners, counter-clockwise.
  std::array<Eigen::Vector2d, 4> footprint() const;

  /// Penetration depth of an interior point and the outward normal of the
  /// nearest face; depth is 0 and normal zero when the point is outside.
  std::pair<double, Vec3> penetration(const Vec3& p) const;
};

/// Separating-axis overlap test of two footprints, inflated by `margin`.
bool footprints_overlap(const Obb& a, const Obb& b, double margin = 0.0);

/// Even-odd point-in-polygon test.
bool point_in_polygon(const Eigen::Vector2d& p, std::span<const Eigen::Vector2d> polygon);

}  // namespace eeroot
