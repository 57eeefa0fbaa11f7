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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eeroot/config.hpp"
#include "eeroot/types.hpp"

namespace eeroot {

class Scene;

/// Occupancy grid with a footprint-inflated layer. Cell (i, j) covers
/// [origin + i*res, origin + (i+1)*res) in x and likewise in y.
class GridMap {
 public:
  GridMap(double resolution, Eigen::Vector2d origin, int width, int height);

  /// Rasterises furniture footprints and floor-level boxes; walls bound the grid.
  static GridMap from_scene(const Scene& scene, const PlannerParams& params);
  /// Rows of '.' (free) and '#' (occupied); the first row is the top (largest y).
  static GridMap from_ascii(std::string_view text, double resolution,
                            Eigen::Vector2d origin = Eigen::Vector2d::Zero());
  /// {"resolution", "origin", "rows"} grid, or {"scene": ...}, or a scenario spec.
  static GridMap from_json(const nlohmann::json& j, const PlannerParams& params);

  double resolution() const { return resolution_; }
  const Eigen::Vector2d& origin() const { return origin_; }
  int width() const { return width_; }
  int height() const { return height_; }

  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width_ && j < height_; }
  std::optional<std::pair<int, int>> cell(double x, double y) const;
  Eigen::Vector2d cell_center(int i, int j) const;

  bool raw_occupied(int i, int j) const;
  void set_occupied(int i, int j, bool value = true);
  /// Minkowski sum of occupied cells (and everything outside the grid) with a disc.
  void inflate(double radius);
  double inflation_radius() const { return inflation_; }

  /// Inflated occupancy; positions outside the grid are blocked.
  bool blocked(double x, double y) const;
  bool blocked_cell(int i, int j) const;

  std::string to_ascii(bool inflated = false) const;

 private:
  double resolution_;
  Eigen::Vector2d origin_;
  int width_;
  int height_;
  double inflation_ = 0.0;
  std::vector<std::uint8_t> raw_;
  std::vector<std::uint8_t> inflated_;
};

enum class Motion { kForward, kReverse, kTurnInPlace };
std::string to_string(Motion m);

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // robot heading
  Motion direction = Motion::kForward;  // primitive arriving at this waypoint
  double curvature = 0.0;               // of that primitive, 1/m
};

struct PlannedPath {
  std::vector<Waypoint> waypoints;
  double cost = 0.0;
  int expansions = 0;

  /// Travelled distance, excluding in-place rotation.
  double length() const;
  /// Dense poses along the path: `step` metres on arcs, rotation split in
  /// steps of `step` radians. Each sample carries the motion producing it.
  std::vector<Waypoint> sample(double step = 0.01) const;

  nlohmann::json to_json() const;
};

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Hybrid A* over (x, y, heading) with forward/reverse arcs and in-place
/// rotation. Throws StartBlocked or NoPath.
PlannedPath plan(const GridMap& map, const Pose2& start, const Pose2& goal,
                 const PlannerParams& params = PlannerParams{});

/// True if every sample of the path at `step` spacing is free in the inflated map.
bool path_collision_free(const GridMap& map, const PlannedPath& path, double step = 0.01);

/// 8-connected reachability of the goal cell from the start cell on the inflated grid.
bool grid_reachable(const GridMap& map, const Pose2& start, const Pose2& goal);

/// Carrot follower. Holds progress along the path; pure given its inputs.
class PathTracker {
 public:
  /// With a goal, completion is judged against it and the goal is returned exactly.
  explicit PathTracker(PlannedPath path, const PlannerParams& params = PlannerParams{},
                       std::optional<Pose2> goal = std::nullopt);

  struct Output {
    RootPose target;
    bool done = false;
  };

  /// Carrot `lookahead` metres ahead along the current same-direction run,
  /// never past a cusp; the goal pose exactly once within tolerance.
  Output update(const RootPose& root);

  const PlannedPath& path() const { return path_; }

 private:
  struct Run {
    std::size_t begin;  // index into samples_
    std::size_t end;    // inclusive
    Motion motion;
  };

  PlannedPath path_;
  PlannerParams params_;
  std::optional<Pose2> goal_;
  std::vector<Waypoint> samples_;
  std::vector<double> arc_;  // cumulative arc length at each sample
  std::vector<Run> runs_;
  std::size_t run_ = 0;
  std::size_t progress_ = 0;
};

}  // namespace eeroot
