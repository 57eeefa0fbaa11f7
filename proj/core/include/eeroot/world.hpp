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
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "eeroot/config.hpp"
#include "eeroot/controller.hpp"
#include "eeroot/geometry.hpp"
#include "eeroot/kinematics.hpp"

namespace eeroot {

/// Static furniture. The local +x axis points out of the front face (the side
/// the robot approaches from); local +y is the piece's own left.
struct Furniture {
  std::string id;
  Obb body;

  double height() const { return body.top(); }
  Vec3 front_normal() const { return body.axis_x(); }
  Vec3 left_axis() const { return body.axis_y(); }
  /// Point on the front face at floor level, shifted `lateral` along the left axis.
  Vec3 front_point(double lateral = 0.0) const;
};

enum class ObjectStatus { kResting, kCarried, kFallen };
std::string to_string(ObjectStatus s);

struct MovableBox {
  std::string id;
  Obb body;
  ObjectStatus status = ObjectStatus::kResting;
  std::string support = "floor";  // furniture id or "floor"; empty while carried
};

struct Wall {
  std::string id;
  Plane plane;  // normal points into the room
};

struct SceneEvent {
  std::uint64_t tick = 0;
  std::string type;  // grasp, grasp_failed, place, drop
  std::string object;
  std::string detail;
};

struct CarryState {
  std::string object;
  Pose3 relative;      // box pose in the carry frame
  double grip_width;   // box extent between the hands
  double slack_time = 0.0;
};

struct GraspResult {
  bool attached = false;
  double distance_left = 0.0;
  double distance_right = 0.0;
};

enum class PlaceOutcome { kPlaced, kDropped };

struct PlaceResult {
  PlaceOutcome outcome = PlaceOutcome::kDropped;
  std::string support;  // where the object ended up
};

/// Carry frame: EE midpoint with the root's heading.
Pose3 carry_frame(const EePoses& ee, const RootPose& root);

/// Room with furniture, walls and movable boxes. Quasi-static: placement snaps
/// to supports and drops are rule based.
class Scene {
 public:
  static constexpr std::string_view kFloor = "floor";

  double room_size = 6.0;
  std::vector<Furniture> furniture;
  std::vector<MovableBox> boxes;
  std::vector<Wall> walls;
  std::optional<CarryState> carry;
  std::vector<SceneEvent> events;
  std::uint64_t tick_count = 0;

  /// Square room centred at the origin with four walls.
  static Scene empty_room(double size = 6.0);

  const Furniture* find_furniture(std::string_view id) const;
  const MovableBox* find_box(std::string_view id) const;
  MovableBox* find_box(std::string_view id);
  /// Throw UnknownObject.
  const Furniture& furniture_by_id(std::string_view id) const;
  const MovableBox& box_by_id(std::string_view id) const;

  /// Summed spring forces of walls, furniture and boxes on each EE.
  ContactForces contact_forces(const EePoses& ee, double k_s) const;

  /// Moves the carried box with the hands, applies the carry-slack drop rule,
  /// advances the tick and returns the contact forces at the new EE poses.
  ContactForces tick(const EePoses& ee, const RootPose& root, const Config& cfg);

  /// Dual-arm squeeze: attaches iff each EE is within tolerance of the box face
  /// centre on its side. Throws UnknownObject; Error if the box is not resting.
  GraspResult try_grasp(std::string_view id, const EePoses& ee, const RootPose& root,
                        const GraspParams& params);

  /// Throws NotCarried.
  PlaceResult try_release(std::string_view id, const GraspParams& params);

  bool resting_on(std::string_view box, std::string_view support) const;

  nlohmann::json to_json() const;
  static Scene from_json(const nlohmann::json& j);

 private:
  void settle(MovableBox& box, ObjectStatus status);
  void log(std::string type, std::string object, std::string detail = {});
};

/// Randomised scenario: nominal layout with planar furniture jitter, random
/// furniture heights and box jitter, robot at the room centre.
struct ScenarioSpec {
  std::uint64_t seed = 0;
  double room_size = 6.0;
  double furniture_jitter = 0.5;
  double min_height = 0.5;
  double max_height = 0.7;
  double box_jitter = 0.25;
  Vec3 box_size{0.3, 0.3, 0.2};
  bool empty = false;  // no furniture or boxes

  static ScenarioSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Deterministic in the spec; furniture pieces never overlap.
Scene sample_scene(const ScenarioSpec& spec);

/// Root pose `standoff` in front of the furniture's front face, shifted
/// `lateral` along its left axis, facing the furniture.
RootPose approach_pose(const Furniture& f, double standoff, double lateral, double z);

/// Start pose at the room centre facing +x.
RootPose start_pose(const Config& cfg);

/// Controller plus scene advanced in lockstep at the control rate.
class Simulation {
 public:
  Simulation(const Config& cfg, Scene scene);

  const Config& config() const { return controller_.config(); }
  const Controller& controller() const { return controller_; }
  const ControllerState& state() const { return state_; }
  const Scene& scene() const { return scene_; }
  Scene& scene() { return scene_; }
  const ContactForces& forces() const { return forces_; }
  EePoses ee_poses() const { return controller_.ee_poses(state_); }
  double time() const { return static_cast<double>(state_.tick) * config().timestep; }

  /// One control tick on `cmd` (held until replaced).
  void step(const EeRootCommand& cmd);
  void step() { step(state_.command); }

  GraspResult try_grasp(std::string_view id);
  PlaceResult try_release(std::string_view id);

  /// Per-tick snapshot used for recordings and the wire protocol.
  nlohmann::json snapshot() const;

 private:
  Controller controller_;
  Scene scene_;
  ControllerState state_;
  ContactForces forces_;
};

}  // namespace eeroot
