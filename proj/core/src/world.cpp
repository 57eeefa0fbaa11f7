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

#include "eeroot/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "eeroot/errors.hpp"
#include "eeroot/impedance.hpp"

namespace eeroot {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSnapBelow = 0.02;  // tolerated penetration when placing

double yaw_of(const Quat& q) {
  const Vec3 x = q * Vec3::UnitX();
  return std::atan2(x.y(), x.x());
}

Quat yaw_quat(double yaw) { return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json obb_json(const Obb& b) {
  return {{"center", vec_json(b.center)}, {"half_extents", vec_json(b.half_extents)}, {"yaw", b.yaw}};
}

Obb obb_from(const json& j) {
  return {vec_from(j.at("center")), vec_from(j.at("half_extents")), j.value("yaw", 0.0)};
}

ObjectStatus status_from(const std::string& s) {
  if (s == "resting") return ObjectStatus::kResting;
  if (s == "carried") return ObjectStatus::kCarried;
  if (s == "fallen") return ObjectStatus::kFallen;
  throw ConfigError("unknown object status '" + s + "'");
}

}  // namespace

std::string to_string(ObjectStatus s) {
  switch (s) {
    case ObjectStatus::kResting: return "resting";
    case ObjectStatus::kCarried: return "carried";
    case ObjectStatus::kFallen: return "fallen";
  }
  return "unknown";
}

Vec3 Furniture::front_point(double lateral) const {
  return body.to_world({body.half_extents.x(), lateral, -body.half_extents.z()});
}

Pose3 carry_frame(const EePoses& ee, const RootPose& root) {
  return {0.5 * (ee.left.position + ee.right.position), yaw_quat(root.yaw)};
}

Scene Scene::empty_room(double size) {
  Scene s;
  s.room_size = size;
  const double h = size / 2.0;
  s.walls = {{"wall_east", {{h, 0, 0}, {-1, 0, 0}}},
             {"wall_west", {{-h, 0, 0}, {1, 0, 0}}},
             {"wall_north", {{0, h, 0}, {0, -1, 0}}},
             {"wall_south", {{0, -h, 0}, {0, 1, 0}}}};
  return s;
}

const Furniture* Scene::find_furniture(std::string_view id) const {
  for (const auto& f : furniture) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const MovableBox* Scene::find_box(std::string_view id) const {
  for (const auto& b : boxes) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

MovableBox* Scene::find_box(std::string_view id) {
  for (auto& b : boxes) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

const Furniture& Scene::furniture_by_id(std::string_view id) const {
  if (const auto* f = find_furniture(id)) return *f;
  throw UnknownObject("unknown furniture '" + std::string(id) + "'");
}

const MovableBox& Scene::box_by_id(std::string_view id) const {
  if (const auto* b = find_box(id)) return *b;
  throw UnknownObject("unknown object '" + std::string(id) + "'");
}

ContactForces Scene::contact_forces(const EePoses& ee, double k_s) const {
  ContactForces out;
  for (Side side : {Side::kLeft, Side::kRight}) {
    ExternalForce& total = out[static_cast<int>(side)];
    const Vec3& p = ee[side].position;
    auto add = [&](const ExternalForce& f) {
      if (!f.in_contact()) return;
      total.force += f.force;
      total.source = total.source.empty() ? f.source : total.source + "+" + f.source;
    };
    for (const auto& w : walls) add(spring_contact_force(p, w.plane, k_s, w.id));
    for (const auto& f : furniture) add(spring_contact_force(p, f.body, k_s, f.id));
    for (const auto& b : boxes) add(spring_contact_force(p, b.body, k_s, b.id));
  }
  return out;
}

ContactForces Scene::tick(const EePoses& ee, const RootPose& root, const Config& cfg) {
  ++tick_count;
  if (carry) {
    MovableBox* box = find_box(carry->object);
    const Pose3 pose = compose(carry_frame(ee, root), carry->relative);
    box->body.center = pose.position;
    box->body.yaw = yaw_of(pose.orientation);
    const double separation = (ee.left.position - ee.right.position).norm();
    const double expected = carry->grip_width - 2.0 * cfg.hands.squeeze_margin;
    if (std::abs(separation - expected) > cfg.grasp.carry_slack) {
      carry->slack_time += cfg.timestep;
    } else {
      carry->slack_time = 0.0;
    }
    if (carry->slack_time > cfg.grasp.carry_slack_time + 1e-9) {
      const std::string id = carry->object;
      carry.reset();
      settle(*box, ObjectStatus::kFallen);
      log("drop", id, "carry slack exceeded");
    }
  }
  return contact_forces(ee, cfg.compliance.contact_stiffness);
}

GraspResult Scene::try_grasp(std::string_view id, const EePoses& ee, const RootPose& root,
                             const GraspParams& params) {
  MovableBox* box = find_box(id);
  if (box == nullptr) throw UnknownObject("unknown object '" + std::string(id) + "'");
  if (box->status != ObjectStatus::kResting || carry) {
    throw Error("try_grasp: '" + std::string(id) + "' is not a resting object or hands are full");
  }
  const Vec3 left_dir(-std::sin(root.yaw), std::cos(root.yaw), 0.0);
  const Vec3 ax = box->body.axis_x();
  const Vec3 ay = box->body.axis_y();
  const bool use_x = std::abs(ax.dot(left_dir)) >= std::abs(ay.dot(left_dir));
  const Vec3 axis = use_x ? ax : ay;
  const double half = use_x ? box->body.half_extents.x() : box->body.half_extents.y();
  const double sign = axis.dot(left_dir) >= 0.0 ? 1.0 : -1.0;
  const Vec3 left_face = box->body.center + sign * half * axis;
  const Vec3 right_face = box->body.center - sign * half * axis;

  GraspResult r;
  r.distance_left = (ee.left.position - left_face).norm();
  r.distance_right = (ee.right.position - right_face).norm();
  r.attached = r.distance_left <= params.tolerance && r.distance_right <= params.tolerance;
  if (!r.attached) {
    log("grasp_failed", box->id,
        "distance_left=" + std::to_string(r.distance_left) +
            " distance_right=" + std::to_string(r.distance_right));
    return r;
  }
  const Pose3 box_pose{box->body.center, yaw_quat(box->body.yaw)};
  carry = CarryState{box->id, compose(carry_frame(ee, root).inverse(), box_pose), 2.0 * half};
  box->status = ObjectStatus::kCarried;
  box->support.clear();
  log("grasp", box->id);
  return r;
}

PlaceResult Scene::try_release(std::string_view id, const GraspParams& params) {
  if (!carry || carry->object != id) {
    throw NotCarried("'" + std::string(id) + "' is not carried");
  }
  MovableBox& box = *find_box(id);
  carry.reset();
  const Furniture* below = nullptr;
  for (const auto& f : furniture) {
    if (point_in_polygon(box.body.center.head<2>(), f.body.footprint()) &&
        (below == nullptr || f.height() > below->height())) {
      below = &f;
    }
  }
  const double surface = below ? below->height() : 0.0;
  const double gap = box.body.bottom() - surface;
  if (gap >= -kSnapBelow && gap <= params.place_height_tolerance) {
    settle(box, ObjectStatus::kResting);
    log("place", box.id, box.support);
    return {PlaceOutcome::kPlaced, box.support};
  }
  settle(box, ObjectStatus::kFallen);
  log("drop", box.id, "released " + std::to_string(gap) + " m above " + box.support);
  return {PlaceOutcome::kDropped, box.support};
}

void Scene::settle(MovableBox& box, ObjectStatus status) {
  const Furniture* below = nullptr;
  for (const auto& f : furniture) {
    if (point_in_polygon(box.body.center.head<2>(), f.body.footprint()) &&
        (below == nullptr || f.height() > below->height())) {
      below = &f;
    }
  }
  box.body.center.z() = (below ? below->height() : 0.0) + box.body.half_extents.z();
  box.status = status;
  box.support = below ? below->id : std::string(kFloor);
}

bool Scene::resting_on(std::string_view box, std::string_view support) const {
  const MovableBox* b = find_box(box);
  return b != nullptr && b->status == ObjectStatus::kResting && b->support == support;
}

void Scene::log(std::string type, std::string object, std::string detail) {
  events.push_back({tick_count, std::move(type), std::move(object), std::move(detail)});
}

json Scene::to_json() const {
  json j;
  j["room_size"] = room_size;
  j["furniture"] = json::array();
  for (const auto& f : furniture) {
    json e = obb_json(f.body);
    e["id"] = f.id;
    j["furniture"].push_back(e);
  }
  j["boxes"] = json::array();
  for (const auto& b : boxes) {
    json e = obb_json(b.body);
    e["id"] = b.id;
    e["status"] = to_string(b.status);
    e["support"] = b.support;
    j["boxes"].push_back(e);
  }
  j["carried"] = carry ? json::array({carry->object}) : json::array();
  return j;
}

Scene Scene::from_json(const json& j) {
  Scene s = empty_room(j.value("room_size", 6.0));
  for (const auto& e : j.value("furniture", json::array())) {
    s.furniture.push_back({e.at("id").get<std::string>(), obb_from(e)});
  }
  for (const auto& e : j.value("boxes", json::array())) {
    MovableBox b{e.at("id").get<std::string>(), obb_from(e),
                 status_from(e.value("status", std::string("resting"))),
                 e.value("support", std::string(kFloor))};
    if (b.status == ObjectStatus::kCarried) throw ConfigError("scene file cannot start with a carried box");
    s.boxes.push_back(b);
  }
  return s;
}

ScenarioSpec ScenarioSpec::from_json(const json& j) {
  ScenarioSpec s;
  s.seed = j.value("seed", s.seed);
  s.room_size = j.value("room_size", s.room_size);
  s.furniture_jitter = j.value("furniture_jitter", s.furniture_jitter);
  s.min_height = j.value("min_height", s.min_height);
  s.max_height = j.value("max_height", s.max_height);
  s.box_jitter = j.value("box_jitter", s.box_jitter);
  if (j.contains("box_size")) s.box_size = vec_from(j.at("box_size"));
  s.empty = j.value("empty", s.empty);
  if (!(s.room_size >= 5.0) || s.min_height > s.max_height || s.furniture_jitter < 0 ||
      s.box_jitter < 0) {
    throw ConfigError("invalid scenario spec");
  }
  return s;
}

json ScenarioSpec::to_json() const {
  return {{"seed", seed},
          {"room_size", room_size},
          {"furniture_jitter", furniture_jitter},
          {"min_height", min_height},
          {"max_height", max_height},
          {"box_jitter", box_jitter},
          {"box_size", vec_json(box_size)},
          {"empty", empty}};
}

RootPose approach_pose(const Furniture& f, double standoff, double lateral, double z) {
  const Vec3 p = f.front_point(lateral) + standoff * f.front_normal();
  const Vec3 facing = -f.front_normal();
  return {p.x(), p.y(), z, wrap_angle(std::atan2(facing.y(), facing.x()))};
}

RootPose start_pose(const Config& cfg) { return {0.0, 0.0, cfg.root.z_nominal, 0.0}; }

namespace {

struct Nominal {
  const char* id;
  Eigen::Vector2d center;  // for a 6 m room
  double yaw;
  Eigen::Vector2d half;    // depth, width
};

const Nominal kFurniture[] = {
    {"table", {1.9, 0.0}, kPi, {0.4, 0.6}},
    {"sofa", {0.0, 2.2}, -kPi / 2, {0.45, 0.9}},
    {"bed", {0.0, -2.2}, kPi / 2, {0.7, 1.0}},
};

constexpr double kRobotClearance = 0.40;
constexpr double kApproachStandoff = 0.5;

bool disc_hits(const Obb& box, const Eigen::Vector2d& p, double radius) {
  return box.footprint_contains(p.x(), p.y(), radius);
}

}  // namespace

Scene sample_scene(const ScenarioSpec& spec) {
  Scene scene = Scene::empty_room(spec.room_size);
  if (spec.empty) return scene;
  std::mt19937_64 rng(spec.seed);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const double scale = spec.room_size / 6.0;
  const double half_room = spec.room_size / 2.0;

  for (int attempt = 0; attempt < 10000; ++attempt) {
    scene.furniture.clear();
    scene.boxes.clear();
    for (const auto& n : kFurniture) {
      const double h = uniform(spec.min_height, spec.max_height);
      Obb body{{n.center.x() * scale + uniform(-spec.furniture_jitter, spec.furniture_jitter),
                n.center.y() * scale + uniform(-spec.furniture_jitter, spec.furniture_jitter),
                h / 2.0},
               {n.half.x(), n.half.y(), h / 2.0},
               n.yaw};
      // Keep the footprint inside the room.
      const double ext_x = std::abs(std::cos(n.yaw)) * n.half.x() + std::abs(std::sin(n.yaw)) * n.half.y();
      const double ext_y = std::abs(std::sin(n.yaw)) * n.half.x() + std::abs(std::cos(n.yaw)) * n.half.y();
      body.center.x() = std::clamp(body.center.x(), -half_room + ext_x + 0.05, half_room - ext_x - 0.05);
      body.center.y() = std::clamp(body.center.y(), -half_room + ext_y + 0.05, half_room - ext_y - 0.05);
      scene.furniture.push_back({n.id, body});
    }

    auto box_on = [&](const char* id, const Furniture& f) {
      const Obb& b = f.body;
      const double depth = std::clamp(0.2 + uniform(-spec.box_jitter, spec.box_jitter), 0.15, 0.30);
      const double lateral_limit = b.half_extents.y() - spec.box_size.y() / 2.0 - 0.05;
      const double lateral = std::clamp(uniform(-spec.box_jitter, spec.box_jitter), -lateral_limit, lateral_limit);
      Vec3 c = b.to_world({b.half_extents.x() - depth, lateral, 0.0});
      c.z() = f.height() + spec.box_size.z() / 2.0;
      return MovableBox{id, {c, spec.box_size / 2.0, b.yaw}, ObjectStatus::kResting, f.id};
    };
    scene.boxes.push_back(box_on("box1", scene.furniture[0]));
    scene.boxes.push_back(box_on("box2", scene.furniture[1]));
    const Vec3 floor_box(-1.5 * scale + uniform(-spec.box_jitter, spec.box_jitter),
                         1.3 * scale + uniform(-spec.box_jitter, spec.box_jitter),
                         spec.box_size.z() / 2.0);
    scene.boxes.push_back({"box3", {floor_box, spec.box_size / 2.0, 0.0}, ObjectStatus::kResting,
                           std::string(Scene::kFloor)});

    bool ok = true;
    for (std::size_t i = 0; ok && i < scene.furniture.size(); ++i) {
      for (std::size_t k = i + 1; ok && k < scene.furniture.size(); ++k) {
        ok = !footprints_overlap(scene.furniture[i].body, scene.furniture[k].body, 0.1);
      }
      ok = ok && !disc_hits(scene.furniture[i].body, Eigen::Vector2d::Zero(), kRobotClearance + 0.3);
      ok = ok && !footprints_overlap(scene.furniture[i].body, scene.boxes[2].body, 0.1);
    }
    // Approach lanes (centre and the lateral spots used for relative placement) stay clear.
    for (const auto& f : scene.furniture) {
      for (double lateral : {-0.3, 0.0, 0.3}) {
        const RootPose a = approach_pose(f, kApproachStandoff, lateral, 0.0);
        const Eigen::Vector2d p(a.x, a.y);
        if (std::abs(p.x()) > half_room - kRobotClearance || std::abs(p.y()) > half_room - kRobotClearance) ok = false;
        for (const auto& other : scene.furniture) {
          if (&other != &f && disc_hits(other.body, p, kRobotClearance + 0.05)) ok = false;
        }
        if (disc_hits(scene.boxes[2].body, p, kRobotClearance + 0.05)) ok = false;
      }
    }
    if (ok) return scene;
  }
  throw ConfigError("sample_scene: no collision-free layout found for this spec");
}

Simulation::Simulation(const Config& cfg, Scene scene)
    : controller_(cfg), scene_(std::move(scene)) {
  const RootPose root = start_pose(cfg);
  state_ = controller_.initial_state(root);
  state_.command = controller_.hold_posture(state_, HandState::rest());
  const EePoses rest{ee_to_world(root, state_.command.ee_left.pose()),
                     ee_to_world(root, state_.command.ee_right.pose())};
  const IkResult ik = solve_ik(controller_.model(), root, state_.q, rest,
                               IkOptions::from_config(cfg), 400, 1e-6, 1e-5);
  state_.q = ik.q;
  forces_ = scene_.contact_forces(ee_poses(), cfg.compliance.contact_stiffness);
}

void Simulation::step(const EeRootCommand& cmd) {
  state_ = controller_.step(state_, cmd, forces_);
  forces_ = scene_.tick(ee_poses(), state_.root, config());
}

GraspResult Simulation::try_grasp(std::string_view id) {
  return scene_.try_grasp(id, ee_poses(), state_.root, config().grasp);
}

PlaceResult Simulation::try_release(std::string_view id) {
  return scene_.try_release(id, config().grasp);
}

json Simulation::snapshot() const {
  const EePoses ee = ee_poses();
  const EePoses targets = controller_.ee_targets(state_);
  auto pose_json = [](const Pose3& p) {
    return json{{"position", vec_json(p.position)},
                {"rotation", vec_json(to_rotation_vector(p.orientation))}};
  };
  json j;
  j["tick"] = state_.tick;
  j["time"] = time();
  j["root"] = {state_.root.x, state_.root.y, state_.root.z, state_.root.yaw};
  j["joints"] = std::vector<double>(state_.q.data(), state_.q.data() + kArmJoints);
  j["ee"] = {{"left", pose_json(ee.left)}, {"right", pose_json(ee.right)}};
  j["ee_targets"] = {{"left", pose_json(targets.left)}, {"right", pose_json(targets.right)}};
  j["command"] = state_.command.encode();
  j["forces"] = {{"left", vec_json(forces_[0].force)}, {"right", vec_json(forces_[1].force)}};
  j["carried"] = scene_.carry ? json::array({scene_.carry->object}) : json::array();
  j["objects"] = json::array();
  for (const auto& b : scene_.boxes) {
    j["objects"].push_back({{"id", b.id},
                            {"center", vec_json(b.body.center)},
                            {"yaw", b.body.yaw},
                            {"status", to_string(b.status)},
                            {"support", b.support}});
  }
  return j;
}

}  // namespace eeroot
