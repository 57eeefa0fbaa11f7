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


#include "eeroot/skills.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>

#include "eeroot/errors.hpp"
#include "eeroot/locomotion.hpp"

namespace eeroot {

using nlohmann::json;

namespace {

constexpr double kOpenClearance = 0.08;  // per side beyond the box face when approaching
constexpr double kReachRadius = 1.0;     // max root travel to the pre-grasp pose

double r3(double v) { return std::round(v * 1000.0) / 1000.0; }

json vec_r3(const Vec3& v) { return {r3(v.x()), r3(v.y()), r3(v.z())}; }

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const std::pair<ParamType, const char*> kParamTypeNames[] = {
    {ParamType::kNumber, "number"},       {ParamType::kString, "string"},
    {ParamType::kEnum, "enum"},           {ParamType::kObjectId, "object_id"},
    {ParamType::kSurfaceId, "surface_id"}, {ParamType::kPose, "pose"},
    {ParamType::kTrajectory, "trajectory"}};

ParamType parse_param_type(std::string_view s) {
  for (const auto& [t, n] : kParamTypeNames) {
    if (s == n) return t;
  }
  throw ParamValidation("unknown parameter type '" + std::string(s) + "'");
}

json number_array(int n) {
  return {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", n}, {"maxItems", n}};
}

bool finite_numbers(const json& a, std::size_t n) {
  if (!a.is_array() || a.size() != n) return false;
  return std::all_of(a.begin(), a.end(),
                     [](const json& v) { return v.is_number() && std::isfinite(v.get<double>()); });
}

void check_trajectory(const json& traj, const std::string& where) {
  if (!traj.is_array() || traj.empty()) throw ParamValidation(where + ": expected a non-empty array");
  double last = -1.0;
  for (const auto& s : traj) {
    if (!s.is_object() || !s.contains("t") || !s["t"].is_number() || !s.contains("command") ||
        !finite_numbers(s["command"], EeRootCommand::kSize)) {
      throw ParamValidation(where + ": samples need a time 't' and a 16-number 'command'");
    }
    const double t = s["t"].get<double>();
    if (!std::isfinite(t) || t < 0.0 || t < last) {
      throw ParamValidation(where + ": times must be non-negative and non-decreasing");
    }
    last = t;
  }
}

Quat yaw_rotation(double yaw) { return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())); }

std::size_t count_events(const Scene& s, std::string_view type) {
  return static_cast<std::size_t>(
      std::count_if(s.events.begin(), s.events.end(), [&](const SceneEvent& e) { return e.type == type; }));
}

EeRootCommand posture(const Config& cfg, const RootPose& root, const HandState& hands) {
  const auto [l, r] = hand_targets(hands, cfg.hands);
  return {root, l, r};
}

RootPose backed_off(const RootPose& r, double distance, double z) {
  return {r.x - distance * std::cos(r.yaw), r.y - distance * std::sin(r.yaw), z, r.yaw};
}

double planar_distance(const RootPose& a, const RootPose& b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Backs off at least `distance`, further if needed so that the planner sees a free start.
RootPose clear_retreat(const Scene& scene, const Config& cfg, const RootPose& from, double distance, double z) {
  const GridMap map = GridMap::from_scene(scene, cfg.planner);
  for (double d = distance; d < distance + 1.0; d += 0.05) {
    const RootPose r = backed_off(from, d, z);
    if (!map.blocked(r.x, r.y)) return backed_off(from, d + 0.05, z);
  }
  return backed_off(from, distance, z);
}

}  // namespace

std::string to_string(ParamType t) {
  for (const auto& [v, n] : kParamTypeNames) {
    if (v == t) return n;
  }
  return "number";
}

bool SkillSpec::permits(const std::optional<HandState>& hands) const {
  if (allowed_hands.empty()) return true;
  if (!hands) return false;
  return std::find(allowed_hands.begin(), allowed_hands.end(), hands->kind) != allowed_hands.end();
}

json SkillSpec::tool_schema() const {
  json props = json::object();
  json required = json::array();
  json order = json::array();
  for (const auto& p : params) {
    json s;
    switch (p.type) {
      case ParamType::kNumber: s["type"] = "number"; break;
      case ParamType::kPose:
        s = {{"type", "object"},
             {"properties", {{"position", number_array(3)}, {"rotation", number_array(3)}}},
             {"required", {"position", "rotation"}}};
        break;
      case ParamType::kTrajectory:
        s = {{"type", "array"},
             {"items",
              {{"type", "object"},
               {"properties", {{"t", {{"type", "number"}}}, {"command", number_array(16)}}},
               {"required", {"t", "command"}}}}};
        break;
      default: s["type"] = "string"; break;
    }
    s["description"] = p.description;
    s["x-semantic"] = to_string(p.type);
    if (!p.unit.empty()) s["x-unit"] = p.unit;
    if (p.minimum) s["minimum"] = *p.minimum;
    if (p.maximum) s["maximum"] = *p.maximum;
    if (!p.choices.empty()) s["enum"] = p.choices;
    if (!p.required && !p.default_value.is_null()) s["default"] = p.default_value;
    props[p.name] = s;
    if (p.required) required.push_back(p.name);
    order.push_back(p.name);
  }
  json hands = json::array();
  for (HandStateKind k : allowed_hands) hands.push_back(HandState{k, 0.0, std::nullopt}.name());
  return {{"type", "function"},
          {"function",
           {{"name", name},
            {"description", description},
            {"parameters",
             {{"type", "object"},
              {"properties", props},
              {"required", required},
              {"additionalProperties", false},
              {"x-order", order}}},
            {"x-allowed-hand-states", hands}}}};
}

SkillSpec SkillSpec::from_tool_schema(const json& j) {
  try {
    const json& f = j.at("function");
    SkillSpec spec;
    spec.name = f.at("name").get<std::string>();
    spec.description = f.value("description", "");
    const json& ps = f.at("parameters");
    const json& props = ps.at("properties");
    const json req = ps.value("required", json::array());
    for (const auto& n : ps.at("x-order")) {
      const std::string name = n.get<std::string>();
      const json& s = props.at(name);
      ParamSpec p;
      p.name = name;
      p.type = parse_param_type(s.at("x-semantic").get<std::string>());
      p.unit = s.value("x-unit", "");
      p.description = s.value("description", "");
      if (s.contains("minimum")) p.minimum = s["minimum"].get<double>();
      if (s.contains("maximum")) p.maximum = s["maximum"].get<double>();
      if (s.contains("enum")) p.choices = s["enum"].get<std::vector<std::string>>();
      p.required = std::find(req.begin(), req.end(), name) != req.end();
      if (s.contains("default")) p.default_value = s["default"];
      spec.params.push_back(std::move(p));
    }
    for (const auto& h : f.value("x-allowed-hand-states", json::array())) {
      spec.allowed_hands.push_back(HandState::parse(h.get<std::string>()).kind);
    }
    return spec;
  } catch (const json::exception& e) {
    throw ParamValidation(std::string("malformed tool schema: ") + e.what());
  }
}

json SkillSpec::validate(const json& params) const {
  const json in = params.is_null() ? json::object() : params;
  if (!in.is_object()) throw ParamValidation(name + ": parameters must be an object");
  for (const auto& [key, _] : in.items()) {
    const bool known =
        std::any_of(this->params.begin(), this->params.end(), [&](const ParamSpec& p) { return p.name == key; });
    if (!known) throw ParamValidation(name + ": unknown parameter '" + key + "'");
  }
  json out = json::object();
  for (const auto& p : this->params) {
    const std::string where = name + "." + p.name;
    if (!in.contains(p.name) || in[p.name].is_null()) {
      if (p.required) throw ParamValidation(where + ": missing required parameter");
      if (!p.default_value.is_null()) out[p.name] = p.default_value;
      continue;
    }
    const json& v = in[p.name];
    switch (p.type) {
      case ParamType::kNumber: {
        if (!v.is_number()) throw ParamValidation(where + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ParamValidation(where + ": not finite");
        if ((p.minimum && x < *p.minimum) || (p.maximum && x > *p.maximum)) {
          throw ParamValidation(where + ": " + std::to_string(x) + " out of range");
        }
        out[p.name] = x;
        break;
      }
      case ParamType::kEnum: {
        if (!v.is_string()) throw ParamValidation(where + ": expected a string");
        const std::string u = upper(v.get<std::string>());
        const auto it = std::find_if(p.choices.begin(), p.choices.end(),
                                     [&](const std::string& c) { return upper(c) == u; });
        if (it == p.choices.end()) throw ParamValidation(where + ": '" + v.get<std::string>() + "' not allowed");
        out[p.name] = *it;
        break;
      }
      case ParamType::kString:
      case ParamType::kObjectId:
      case ParamType::kSurfaceId:
        if (!v.is_string() || v.get<std::string>().empty()) {
          throw ParamValidation(where + ": expected a non-empty string");
        }
        out[p.name] = v;
        break;
      case ParamType::kPose:
        if (!v.is_object() || !v.contains("position") || !v.contains("rotation") ||
            !finite_numbers(v["position"], 3) || !finite_numbers(v["rotation"], 3) || v.size() != 2) {
          throw ParamValidation(where + ": expected {position: [3], rotation: [3]}");
        }
        out[p.name] = v;
        break;
      case ParamType::kTrajectory:
        check_trajectory(v, where);
        out[p.name] = v;
        break;
    }
  }
  return out;
}

std::string to_string(SkillStatus s) {
  switch (s) {
    case SkillStatus::kSucceeded: return "succeeded";
    case SkillStatus::kFailed: return "failed";
    case SkillStatus::kAborted: return "aborted";
  }
  return "failed";
}

json SkillOutcome::to_json(bool with_observation) const {
  json j{{"skill", skill}, {"status", eeroot::to_string(status)}, {"start_tick", start_tick}, {"ticks", ticks}};
  if (!reason.empty()) j["reason"] = reason;
  if (!detail.empty()) j["detail"] = detail;
  if (with_observation && !observation.is_null()) j["observation"] = observation;
  return j;
}

json observe(const SkillContext& ctx, const SkillOutcome* last) {
  const Simulation& sim = ctx.sim;
  const Scene& scene = sim.scene();
  const RootPose& root = sim.state().root;
  const EePoses ee = sim.ee_poses();
  json j;
  j["time"] = r3(sim.time());
  j["root"] = {r3(root.x), r3(root.y), r3(root.z), r3(root.yaw)};
  j["ee_root_frame"] = {{"left", vec_r3(world_to_ee(root, ee.left).position)},
                        {"right", vec_r3(world_to_ee(root, ee.right).position)}};
  j["hands"] = {{"state", ctx.hands ? ctx.hands->name() : "CUSTOM"},
                {"locomotion_safe", ctx.hands && ctx.hands->locomotion_safe()}};
  j["carrying"] = scene.carry ? json(scene.carry->object) : json(nullptr);
  json furniture = json::array();
  for (const auto& f : scene.furniture) {
    const Vec3 n = f.front_normal();
    furniture.push_back({{"id", f.id},
                         {"center", {r3(f.body.center.x()), r3(f.body.center.y())}},
                         {"size", {r3(2 * f.body.half_extents.x()), r3(2 * f.body.half_extents.y())}},
                         {"height", r3(f.height())},
                         {"front_yaw", r3(std::atan2(n.y(), n.x()))}});
  }
  j["furniture"] = furniture;
  json objects = json::array();
  for (const auto& b : scene.boxes) {
    json o{{"id", b.id}, {"position", vec_r3(b.body.center)}, {"status", to_string(b.status)}};
    if (!b.support.empty()) o["on"] = b.support;
    objects.push_back(o);
  }
  j["objects"] = objects;
  j["object_source"] = "ground_truth";
  if (last != nullptr) j["last_outcome"] = last->to_json(false);
  return j;
}

SkillRun::SkillRun(SkillContext& ctx, double timeout)
    : ctx_(ctx), timeout_(timeout), start_tick_(ctx.sim.state().tick) {}

double SkillRun::elapsed() const {
  return static_cast<double>(ctx_.sim.state().tick - start_tick_) * config().timestep;
}

void SkillRun::emit(const EeRootCommand& cmd) {
  if (ctx_.abort != nullptr && ctx_.abort->load()) throw Aborted("skill aborted");
  if (elapsed() > timeout_ + 1e-9) throw Timeout("skill exceeded " + std::to_string(timeout_) + " s");
  if (ctx_.on_command) ctx_.on_command(cmd);
  ++emitted_;
  const double ticks_per_command = 1.0 / (config().skill_rate * config().timestep);
  const auto target =
      start_tick_ + static_cast<std::uint64_t>(std::ceil(static_cast<double>(emitted_) * ticks_per_command - 1e-9));
  while (ctx_.sim.state().tick < target) {
    ctx_.sim.step(cmd);
    if (ctx_.on_tick) ctx_.on_tick(ctx_.sim);
  }
}

bool SkillRun::settle(const EeRootCommand& cmd, double max_seconds, double position_tol, double yaw_tol) {
  const double until = elapsed() + max_seconds;
  for (;;) {
    emit(cmd);
    const ControllerState& s = ctx_.sim.state();
    const RootPose& r = s.root;
    const bool root_ok = std::hypot(r.x - cmd.root.x, r.y - cmd.root.y) <= position_tol &&
                         std::abs(r.z - cmd.root.z) <= position_tol &&
                         std::abs(wrap_angle(r.yaw - cmd.root.yaw)) <= yaw_tol;
    const EePoses actual = ctx_.sim.ee_poses();
    const EePoses target = ctx_.sim.controller().ee_targets(s);
    const bool ee_ok = (actual.left.position - target.left.position).norm() <= position_tol &&
                       (actual.right.position - target.right.position).norm() <= position_tol;
    if (root_ok && ee_ok) return true;
    if (elapsed() >= until) return false;
  }
}

std::pair<RootPose, double> grasp_root_for(const Vec3& midpoint, double yaw, const Config& cfg) {
  const double fwd = cfg.hands.grasp_forward;
  RootPose r{midpoint.x() - fwd * std::cos(yaw), midpoint.y() - fwd * std::sin(yaw),
             std::clamp(midpoint.z() - cfg.hands.grasp_height, cfg.root.z_min, cfg.root.z_max),
             wrap_angle(yaw)};
  return {r, midpoint.z() - r.z};
}

// ---- registry ------------------------------------------------------------

void SkillRegistry::add(SkillSpec spec, SkillBody body) {
  if (contains(spec.name)) throw Error("duplicate skill '" + spec.name + "'");
  entries_.push_back({std::move(spec), std::move(body)});
}

bool SkillRegistry::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.spec.name == name; });
}

const SkillSpec& SkillRegistry::spec(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.spec.name == name) return e.spec;
  }
  throw UnknownSkill("unknown skill '" + std::string(name) + "'");
}

std::vector<SkillSpec> SkillRegistry::specs() const {
  std::vector<SkillSpec> out;
  for (const auto& e : entries_) out.push_back(e.spec);
  return out;
}

json SkillRegistry::tool_schemas() const {
  json out = json::array();
  for (const auto& e : entries_) out.push_back(e.spec.tool_schema());
  return out;
}

SkillOutcome SkillRegistry::invoke(std::string_view name, const json& params, SkillContext& ctx) const {
  const Entry* entry = nullptr;
  for (const auto& e : entries_) {
    if (e.spec.name == name) entry = &e;
  }
  if (entry == nullptr) throw UnknownSkill("unknown skill '" + std::string(name) + "'");
  const json p = entry->spec.validate(params);
  if (!entry->spec.permits(ctx.hands)) {
    throw SafetyViolation(entry->spec.name + " is not allowed with hands in " +
                          (ctx.hands ? ctx.hands->name() : std::string("CUSTOM")));
  }
  SkillRun run(ctx, ctx.sim.config().task.skill_timeout);
  const SkillResult r = entry->body(run, p);
  SkillOutcome out;
  out.skill = entry->spec.name;
  out.status = r.reason.empty() ? SkillStatus::kSucceeded : SkillStatus::kFailed;
  out.reason = r.reason;
  out.detail = r.detail;
  out.start_tick = run.start_tick();
  out.ticks = ctx.sim.state().tick - run.start_tick();
  out.observation = observe(ctx);
  return out;
}

SkillOutcome SkillRegistry::execute(std::string_view name, const json& params, SkillContext& ctx) const noexcept {
  const std::uint64_t start = ctx.sim.state().tick;
  auto failed = [&](SkillStatus status, std::string reason, std::string detail) {
    SkillOutcome out;
    out.skill = std::string(name);
    out.status = status;
    out.reason = std::move(reason);
    out.detail = std::move(detail);
    out.start_tick = start;
    out.ticks = ctx.sim.state().tick - start;
    try {
      out.observation = observe(ctx);
    } catch (...) {
    }
    return out;
  };
  try {
    return invoke(name, params, ctx);
  } catch (const UnknownSkill& e) {
    return failed(SkillStatus::kFailed, "UnknownSkill", e.what());
  } catch (const ParamValidation& e) {
    return failed(SkillStatus::kFailed, "ParamValidation", e.what());
  } catch (const SafetyViolation& e) {
    return failed(SkillStatus::kFailed, "SafetyViolation", e.what());
  } catch (const Timeout& e) {
    return failed(SkillStatus::kFailed, "Timeout", e.what());
  } catch (const Aborted& e) {
    return failed(SkillStatus::kAborted, "Aborted", e.what());
  } catch (const UnknownObject& e) {
    return failed(SkillStatus::kFailed, "UnknownObject", e.what());
  } catch (const std::exception& e) {
    return failed(SkillStatus::kFailed, "Error", e.what());
  }
}

// ---- built-in skills -----------------------------------------------------

namespace {

ParamSpec number(std::string name, std::string unit, double lo, double hi, std::string description) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = ParamType::kNumber;
  p.unit = std::move(unit);
  p.minimum = lo;
  p.maximum = hi;
  p.description = std::move(description);
  return p;
}

ParamSpec typed(std::string name, ParamType type, std::string description) {
  ParamSpec p;
  p.name = std::move(name);
  p.type = type;
  p.description = std::move(description);
  return p;
}

ParamSpec optional(ParamSpec p, json default_value = nullptr) {
  p.required = false;
  p.default_value = std::move(default_value);
  return p;
}

SkillResult move_to(SkillRun& run, const json& p) {
  Simulation& sim = run.sim();
  const Config& cfg = run.config();
  const RootPose start = sim.state().root;
  const Pose2 goal{p["x"].get<double>(), p["y"].get<double>(), wrap_angle(p["theta"].get<double>())};
  const GridMap map = GridMap::from_scene(sim.scene(), cfg.planner);
  PlannedPath path;
  try {
    path = plan(map, {start.x, start.y, start.yaw}, goal, cfg.planner);
  } catch (const StartBlocked& e) {
    return SkillResult::fail("StartBlocked", e.what());
  } catch (const NoPath& e) {
    return SkillResult::fail("NoPath", e.what());
  }
  PathTracker tracker(std::move(path), cfg.planner, goal);
  auto& on_path = run.context().on_path;
  if (on_path) on_path(&tracker.path());
  struct PathDone {
    std::function<void(const PlannedPath*)>& cb;
    ~PathDone() {
      if (cb) cb(nullptr);
    }
  } path_done{on_path};
  EeRootCommand cmd = sim.state().command;
  const double z = cmd.root.z;
  const std::size_t drops = count_events(sim.scene(), "drop");
  auto dropped = [&] { return count_events(sim.scene(), "drop") > drops; };
  for (;;) {
    const auto out = tracker.update(sim.state().root);
    cmd.root = {out.target.x, out.target.y, z, out.target.yaw};
    if (out.done) break;
    run.emit(cmd);
    if (dropped()) return SkillResult::fail("Dropped", "object dropped during transport");
  }
  const bool settled = run.settle(cmd, 5.0);
  if (dropped()) return SkillResult::fail("Dropped", "object dropped during transport");
  if (!settled) return SkillResult::fail("Unreachable", "root did not settle on the goal");
  return SkillResult::ok();
}

SkillResult set_hands(SkillRun& run, const json& p) {
  Simulation& sim = run.sim();
  HandState h = HandState::parse(p["state"].get<std::string>(), p["width"].get<double>());
  if (h.kind == HandStateKind::kGrasp && p.contains("height")) h.height = p["height"].get<double>();
  const bool carrying = sim.scene().carry.has_value();
  const EeRootCommand cmd = sim.controller().hold_posture(sim.state(), h);
  run.context().hands = h;
  const bool settled = run.settle(cmd);
  if (carrying && !sim.scene().carry) return SkillResult::fail("Dropped", "object dropped while changing hands");
  if (!settled) return SkillResult::fail("Unreachable", "hands did not reach " + h.name());
  return SkillResult::ok();
}

SkillResult grasp(SkillRun& run, const json& p) {
  Simulation& sim = run.sim();
  const Config& cfg = run.config();
  const std::string id = p["object"].get<std::string>();
  if (sim.scene().carry) return SkillResult::fail("HandsFull", "already carrying " + sim.scene().carry->object);
  const MovableBox* box = sim.scene().find_box(id);
  if (box == nullptr) return SkillResult::fail("UnknownObject", "no object '" + id + "'");
  if (box->status != ObjectStatus::kResting) return SkillResult::fail("NotResting", id + " is " + to_string(box->status));

  const RootPose start = sim.state().root;
  Vec3 desired;
  if (const Furniture* f = sim.scene().find_furniture(box->support)) {
    desired = -f->front_normal();
  } else {
    desired = Vec3(box->body.center.x() - start.x, box->body.center.y() - start.y, 0.0);
  }
  // Face the box squarely along whichever box axis is closest to the desired heading.
  const Vec3 ax = box->body.axis_x(), ay = box->body.axis_y();
  Vec3 facing = ax;
  double best = -2.0;
  for (const Vec3& d : {ax, Vec3(-ax), ay, Vec3(-ay)}) {
    const double score = d.head<2>().normalized().dot(desired.head<2>().normalized());
    if (score > best) {
      best = score;
      facing = d;
    }
  }
  const bool along_x = std::abs(facing.dot(ax)) > 0.5;
  const double width = 2.0 * (along_x ? box->body.half_extents.y() : box->body.half_extents.x());
  const double yaw = std::atan2(facing.y(), facing.x());
  const auto [grasp_root, height] = grasp_root_for(box->body.center, yaw, cfg);
  const RootPose pre = backed_off(grasp_root, cfg.grasp.approach_offset, grasp_root.z);
  if (planar_distance(start, pre) > kReachRadius) {
    return SkillResult::fail("OutOfReach", id + " is too far; move in front of it first");
  }

  const HandState open = HandState::grasp(width + 2.0 * kOpenClearance, height);
  const HandState squeeze = HandState::grasp(width, height);
  run.context().hands = open;
  if (!run.settle(posture(cfg, pre, open))) return SkillResult::fail("Unreachable", "approach pose not reached");
  if (!run.settle(posture(cfg, grasp_root, open))) return SkillResult::fail("Unreachable", "grasp pose not reached");
  run.context().hands = squeeze;
  run.settle(posture(cfg, grasp_root, squeeze), 3.0);
  const GraspResult g = sim.try_grasp(id);
  if (!g.attached) {
    return SkillResult::fail("GraspFailed", "distance_left=" + std::to_string(g.distance_left) +
                                                " distance_right=" + std::to_string(g.distance_right));
  }
  run.context().hands = HandState::hold();
  const RootPose retreat = clear_retreat(sim.scene(), cfg, grasp_root, cfg.grasp.approach_offset, cfg.root.z_nominal);
  const bool settled = run.settle(posture(cfg, retreat, HandState::hold()));
  if (!sim.scene().carry) return SkillResult::fail("Dropped", "object dropped while lifting");
  if (!settled) return SkillResult::fail("Unreachable", "lift pose not reached");
  return SkillResult::ok();
}

SkillResult place(SkillRun& run, const json& p) {
  Simulation& sim = run.sim();
  const Config& cfg = run.config();
  if (!sim.scene().carry) return SkillResult::fail("NotCarried", "nothing is being carried");
  const std::string surface = p["surface"].get<std::string>();
  const Furniture* f = sim.scene().find_furniture(surface);
  if (f == nullptr) return SkillResult::fail("UnknownObject", "no surface '" + surface + "'");
  const CarryState carry = *sim.scene().carry;
  const MovableBox& box = sim.scene().box_by_id(carry.object);
  const double lateral = p["lateral"].get<double>();
  const double box_half = std::max(box.body.half_extents.x(), box.body.half_extents.y());
  if (std::abs(lateral) + box_half > f->body.half_extents.y()) {
    return SkillResult::fail("InvalidPlacement", "lateral offset leaves the surface");
  }

  const Vec3 facing = -f->front_normal();
  const double yaw = std::atan2(facing.y(), facing.x());
  Vec3 target = f->front_point(lateral) + facing * cfg.grasp.place_depth;
  target.z() = f->height() + box.body.half_extents.z() + cfg.grasp.place_clearance;
  const Vec3 midpoint = target - yaw_rotation(yaw) * carry.relative.position;
  const auto [place_root, height] = grasp_root_for(midpoint, yaw, cfg);
  const RootPose pre = backed_off(place_root, cfg.grasp.approach_offset, place_root.z);
  if (planar_distance(sim.state().root, pre) > kReachRadius) {
    return SkillResult::fail("OutOfReach", surface + " is too far; move in front of it first");
  }

  const HandState carrying = HandState::grasp(carry.grip_width, height);
  run.context().hands = carrying;
  if (!run.settle(posture(cfg, pre, carrying))) return SkillResult::fail("Unreachable", "approach pose not reached");
  if (!run.settle(posture(cfg, place_root, carrying))) return SkillResult::fail("Unreachable", "place pose not reached");
  if (!sim.scene().carry) return SkillResult::fail("Dropped", "object dropped before release");
  const PlaceResult r = sim.try_release(carry.object);
  const HandState open = HandState::grasp(carry.grip_width + 2.0 * kOpenClearance, height);
  run.context().hands = open;
  run.settle(posture(cfg, place_root, open), 2.0);
  run.context().hands = HandState::rest();
  const RootPose retreat = clear_retreat(sim.scene(), cfg, place_root, cfg.grasp.approach_offset, cfg.root.z_nominal);
  const bool settled = run.settle(posture(cfg, retreat, HandState::rest()));
  if (r.outcome == PlaceOutcome::kDropped) {
    return SkillResult::fail("Dropped", carry.object + " fell onto " + r.support);
  }
  if (!settled) return SkillResult::fail("Unreachable", "retreat pose not reached");
  return SkillResult::ok();
}

EeTarget target_of(const json& pose) {
  return {Vec3(pose["position"][0].get<double>(), pose["position"][1].get<double>(), pose["position"][2].get<double>()),
          Vec3(pose["rotation"][0].get<double>(), pose["rotation"][1].get<double>(), pose["rotation"][2].get<double>())};
}

SkillResult ee_goto(SkillRun& run, const json& p) {
  EeRootCommand cmd = run.sim().state().command;
  cmd.ee_left = target_of(p["left"]);
  cmd.ee_right = target_of(p["right"]);
  run.context().hands.reset();
  if (!run.settle(cmd)) return SkillResult::fail("Unreachable", "EE targets not reached");
  return SkillResult::ok();
}

SkillResult stub_planner(SkillRun& run, const json& p) {
  json traj;
  if (p.contains("trajectory")) {
    traj = p["trajectory"];
  } else if (p.contains("file")) {
    std::ifstream in(p["file"].get<std::string>());
    if (!in) throw ParamValidation("stub_planner.file: cannot open " + p["file"].get<std::string>());
    try {
      traj = json::parse(in);
    } catch (const json::exception& e) {
      throw ParamValidation(std::string("stub_planner.file: ") + e.what());
    }
    check_trajectory(traj, "stub_planner.file");
  } else {
    throw ParamValidation("stub_planner: needs 'trajectory' or 'file'");
  }
  auto command_at = [&](std::size_t k) {
    const auto flat = traj[k]["command"].get<std::array<double, EeRootCommand::kSize>>();
    return EeRootCommand::decode(flat);
  };
  run.context().hands.reset();
  const double t0 = run.elapsed();
  const std::size_t n = traj.size();
  std::size_t k = 0;
  for (;;) {
    const double t = run.elapsed() - t0;
    while (k + 1 < n && traj[k + 1]["t"].get<double>() <= t + 1e-9) ++k;
    if (k + 1 == n && t + 1e-9 >= traj[k]["t"].get<double>()) break;
    run.emit(command_at(k));
  }
  if (!run.settle(command_at(n - 1), 5.0)) return SkillResult::fail("Unreachable", "final waypoint not reached");
  return SkillResult::ok();
}

}  // namespace

SkillRegistry SkillRegistry::builtin() {
  const double two_pi = 2.0 * std::numbers::pi;
  SkillRegistry r;
  r.add({"move_to",
         "Walk the root to world position (x, y) with heading theta, planning around furniture. "
         "The hands keep their posture; allowed only with hands in REST or HOLD.",
         {number("x", "m", -10, 10, "target x in the world frame"),
          number("y", "m", -10, 10, "target y in the world frame"),
          number("theta", "rad", -two_pi, two_pi, "target heading, counter-clockwise from +x")},
         {HandStateKind::kRest, HandStateKind::kHold}},
        move_to);
  ParamSpec state = typed("state", ParamType::kEnum, "canonical hand state");
  state.choices = {"REST", "HOLD", "READY", "GRASP"};
  r.add({"set_hands",
         "Move both hands to a canonical state. REST and HOLD permit walking; READY and GRASP do not.",
         {state, optional(number("width", "m", 0.05, 0.8, "GRASP: object width between the hands"), 0.3),
          optional(number("height", "m", -0.2, 0.4, "GRASP: hand height in the root frame"))},
         {}},
        set_hands);
  r.add({"grasp",
         "Approach a box resting in front of the robot, squeeze it between both hands and lift it "
         "into HOLD. Stand at the furniture approach pose first.",
         {typed("object", ParamType::kObjectId, "id of the box to pick up")},
         {}},
        grasp);
  r.add({"place",
         "Put the carried box on a furniture surface, then retreat with hands in REST. Stand at the "
         "surface approach pose first.",
         {typed("surface", ParamType::kSurfaceId, "id of the furniture to place on"),
          optional(number("lateral", "m", -1.0, 1.0,
                          "offset along the furniture's own left axis (positive = its left)"),
                   0.0)},
         {}},
        place);
  r.add({"ee_goto",
         "Send both hands to explicit poses in the root frame (position m, rotation vector rad).",
         {typed("left", ParamType::kPose, "left hand pose in the root frame"),
          typed("right", ParamType::kPose, "right hand pose in the root frame")},
         {}},
        ee_goto);
  r.add({"stub_planner",
         "Replay an externally generated EE-root trajectory: samples {t, command[16]} with "
         "zero-order hold between them.",
         {optional(typed("file", ParamType::kString, "path of a JSON trajectory file")),
          optional(typed("trajectory", ParamType::kTrajectory, "inline trajectory samples"))},
         {}},
        stub_planner);
  return r;
}

// ---- teleop --------------------------------------------------------------

std::string to_string(TeleopMode m) { return m == TeleopMode::kMirrored ? "mirrored" : "independent"; }

TeleopMode parse_teleop_mode(std::string_view s) {
  const std::string l = lower(std::string(s));
  if (l == "mirrored") return TeleopMode::kMirrored;
  if (l == "independent") return TeleopMode::kIndependent;
  throw ParamValidation("unknown teleop mode '" + std::string(s) + "'");
}

EeRootCommand teleop_map(const EeRootCommand& current, const TeleopInput& input, TeleopMode mode,
                         const RootLimits& limits, const TeleopSteps& steps) {
  Vec3 left = input.left;
  Vec3 right = input.right;
  Eigen::Vector4d root = input.root;
  const bool to_left = input.hand != "right";
  const bool to_right = input.hand != "left";
  for (const std::string& raw : input.keys) {
    const std::string k = lower(raw);
    Vec3 e = Vec3::Zero();
    if (k == "arrowup") e.x() = steps.ee;
    else if (k == "arrowdown") e.x() = -steps.ee;
    else if (k == "arrowright") e.y() = steps.ee;
    else if (k == "arrowleft") e.y() = -steps.ee;
    else if (k == "pageup") e.z() = steps.ee;
    else if (k == "pagedown") e.z() = -steps.ee;
    else if (k == "w") root[0] += steps.planar;
    else if (k == "s") root[0] -= steps.planar;
    else if (k == "a") root[1] += steps.planar;
    else if (k == "d") root[1] -= steps.planar;
    else if (k == "r") root[2] += steps.height;
    else if (k == "f") root[2] -= steps.height;
    else if (k == "q") root[3] += steps.yaw;
    else if (k == "e") root[3] -= steps.yaw;
    if (mode == TeleopMode::kMirrored || to_left) left += e;
    if (mode == TeleopMode::kIndependent && to_right) right += e;
  }
  if (mode == TeleopMode::kMirrored) right = Vec3(left.x(), -left.y(), left.z());

  EeRootCommand out = current;
  out.ee_left.position += left;
  out.ee_right.position += right;
  const double c = std::cos(current.root.yaw), s = std::sin(current.root.yaw);
  out.root.x += c * root[0] - s * root[1];
  out.root.y += s * root[0] + c * root[1];
  out.root.z = std::clamp(current.root.z + root[2], limits.z_min, limits.z_max);
  out.root.yaw = wrap_angle(current.root.yaw + root[3]);
  return out;
}

}  // namespace eeroot
