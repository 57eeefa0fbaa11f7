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


#include "eeroot/task_manager.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <regex>
#include <sstream>

#include "eeroot/errors.hpp"
#include "eeroot/geometry.hpp"

namespace eeroot {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kApproachStandoff = 0.5;
constexpr double kSpatialLateral = 0.3;
constexpr int kGiveUpAfter = 3;  // identical failed calls

}  // namespace

const json& Conversation::latest_observation() const {
  return turns.empty() ? initial_observation : turns.back().observation;
}

// ---- scripted backend ------------------------------------------------------

namespace {

struct Subtask {
  enum class Kind { kArm, kNav, kMove };
  Kind kind = Kind::kArm;
  HandStateKind hands = HandStateKind::kRest;
  std::string box;  // explicit id, or empty for "the box"
  std::string src;  // furniture id or empty
  std::string dst;  // furniture id
  double lateral = 0.0;
};

struct Word {
  std::string text;
  std::size_t index;
};

std::string normalise(std::string_view in) {
  std::string s;
  for (char c : in) {
    const auto u = static_cast<unsigned char>(c);
    s += std::isalnum(u) ? static_cast<char>(std::tolower(u)) : (c == ',' || c == ';' || c == '.' ? c : ' ');
  }
  return s;
}

std::vector<std::string> split_pieces(const std::string& s) {
  static const std::regex sep(R"(\s*(?:[;.]|,?\s*\b(?:and then|then|after that|afterwards|finally)\b)\s*)");
  std::vector<std::string> out;
  std::sregex_token_iterator it(s.begin(), s.end(), sep, -1), end;
  for (; it != end; ++it) {
    std::string p = *it;
    std::replace(p.begin(), p.end(), ',', ' ');
    if (p.find_first_not_of(' ') != std::string::npos) out.push_back(" " + p + " ");
  }
  return out;
}

std::vector<Word> words(const std::string& s) {
  std::vector<Word> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back({w, out.size()});
  return out;
}

std::string furniture_id(const std::string& w) {
  static const std::map<std::string, std::string> synonyms = {
      {"table", "table"}, {"desk", "table"}, {"sofa", "sofa"}, {"couch", "sofa"}, {"bed", "bed"}};
  const auto it = synonyms.find(w);
  return it == synonyms.end() ? std::string() : it->second;
}

bool has_any(const std::string& piece, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    if (std::regex_search(piece, std::regex(std::string(R"(\b)") + k + R"(\b)"))) return true;
  }
  return false;
}

std::optional<Subtask> parse_piece(const std::string& piece) {
  const auto ws = words(piece);
  struct Mention {
    std::string id;
    std::size_t at;
  };
  std::vector<Mention> furniture;
  for (const auto& w : ws) {
    const std::string id = furniture_id(w.text);
    if (!id.empty()) furniture.push_back({id, w.index});
  }
  auto preceded_by = [&](std::size_t at, std::initializer_list<const char*> preps) {
    for (std::size_t back = 1; back <= 3 && back <= at; ++back) {
      for (const char* p : preps) {
        if (ws[at - back].text == p) return true;
      }
    }
    return false;
  };

  Subtask t;
  std::smatch m;
  const bool boxy = has_any(piece, {"box", "boxes", "package", "crate", R"(box\d+)"});
  if (boxy) {
    t.kind = Subtask::Kind::kMove;
    if (std::regex_search(piece, m, std::regex(R"(\bbox\s*(\d+)\b)"))) t.box = "box" + m[1].str();
    static const std::regex side(R"(\b(left|right)\s+(?:side\s+)?of\s+(?:the\s+)?(\w+))");
    if (std::regex_search(piece, m, side) && !furniture_id(m[2].str()).empty()) {
      t.dst = furniture_id(m[2].str());
      t.lateral = m[1].str() == "left" ? kSpatialLateral : -kSpatialLateral;
      for (const auto& f : furniture) {
        if (f.id != t.dst) t.src = f.id;
      }
      return t;
    }
    for (const auto& f : furniture) {
      if (preceded_by(f.at, {"from", "off"})) t.src = f.id;
    }
    for (const auto& f : furniture) {
      if (f.id != t.src && preceded_by(f.at, {"to", "onto", "on", "into", "atop"})) t.dst = f.id;
    }
    if (t.dst.empty() && !furniture.empty() && furniture.back().id != t.src) t.dst = furniture.back().id;
    if (t.src.empty() && furniture.size() >= 2 && furniture.front().id != t.dst) t.src = furniture.front().id;
    if (t.dst.empty()) return std::nullopt;
    return t;
  }
  if (has_any(piece, {"hand", "hands", "arm", "arms"})) {
    t.kind = Subtask::Kind::kArm;
    if (has_any(piece, {"down", "lower", "rest", "relax", "drop"})) {
      t.hands = HandStateKind::kRest;
    } else if (has_any(piece, {"up", "raise", "lift", "ready", "prepare", "high"})) {
      t.hands = HandStateKind::kReady;
    } else if (has_any(piece, {"hold", "front", "chest", "carry", "tuck"})) {
      t.hands = HandStateKind::kHold;
    } else {
      return std::nullopt;
    }
    return t;
  }
  if (!furniture.empty()) {
    t.kind = Subtask::Kind::kNav;
    t.dst = furniture.back().id;
    return t;
  }
  return std::nullopt;
}

const json* find_by_id(const json& list, std::string_view id) {
  for (const auto& e : list) {
    if (e.at("id") == id) return &e;
  }
  return nullptr;
}

RootPose approach_from_observation(const json& f, double lateral) {
  const double fy = f.at("front_yaw").get<double>();
  const Eigen::Vector2d n(std::cos(fy), std::sin(fy));
  const Eigen::Vector2d left(-std::sin(fy), std::cos(fy));
  const Eigen::Vector2d c(f.at("center")[0].get<double>(), f.at("center")[1].get<double>());
  const Eigen::Vector2d p = c + (0.5 * f.at("size")[0].get<double>() + kApproachStandoff) * n + lateral * left;
  return {p.x(), p.y(), 0.0, wrap_angle(fy + kPi)};
}

bool near(const json& obs, const RootPose& p, double pos_tol, double yaw_tol) {
  const json& r = obs.at("root");
  return std::hypot(r[0].get<double>() - p.x, r[1].get<double>() - p.y) <= pos_tol &&
         std::abs(wrap_angle(r[3].get<double>() - p.yaw)) <= yaw_tol;
}

std::string hands_of(const json& obs) { return obs.at("hands").at("state").get<std::string>(); }
bool hands_safe(const json& obs) { return obs.at("hands").at("locomotion_safe").get<bool>(); }

std::string kind_name(HandStateKind k) { return HandState{k, 0.0, std::nullopt}.name(); }

Decision call(std::string reasoning, std::string name, json params) {
  return {std::move(reasoning), SkillCall{std::move(name), std::move(params)}};
}

Decision done(std::string reasoning) { return {std::move(reasoning), std::nullopt}; }

Decision move_to(const RootPose& p, const std::string& why) {
  return call(why, "move_to", {{"x", std::round(p.x * 1000) / 1000}, {"y", std::round(p.y * 1000) / 1000},
                               {"theta", std::round(p.yaw * 1000) / 1000}});
}

bool task_done(const Subtask& t, const json& obs) {
  switch (t.kind) {
    case Subtask::Kind::kArm: return hands_of(obs) == kind_name(t.hands);
    case Subtask::Kind::kNav: {
      const json* f = find_by_id(obs.at("furniture"), t.dst);
      return f != nullptr && near(obs, approach_from_observation(*f, 0.0), 0.2, 0.3);
    }
    case Subtask::Kind::kMove: {
      const json* b = find_by_id(obs.at("objects"), t.box);
      return b != nullptr && b->at("status") == "resting" && b->value("on", "") == t.dst;
    }
  }
  return false;
}

Decision step(const Subtask& t, const json& obs, const Conversation& conv) {
  switch (t.kind) {
    case Subtask::Kind::kArm:
      return call("Set both hands to " + kind_name(t.hands) + ".", "set_hands", {{"state", kind_name(t.hands)}});
    case Subtask::Kind::kNav: {
      const json* f = find_by_id(obs.at("furniture"), t.dst);
      if (f == nullptr) return done("There is no " + t.dst + " in this room.");
      if (!hands_safe(obs)) return call("Hands must be in a walking posture first.", "set_hands", {{"state", "REST"}});
      return move_to(approach_from_observation(*f, 0.0), "Walk to the " + t.dst + " approach pose.");
    }
    case Subtask::Kind::kMove: break;
  }
  const json* box = find_by_id(obs.at("objects"), t.box);
  if (box == nullptr) return done("I cannot find " + t.box + ".");
  const json* dst = find_by_id(obs.at("furniture"), t.dst);
  if (dst == nullptr) return done("There is no " + t.dst + " in this room.");
  const json& carrying = obs.at("carrying");
  if (carrying == t.box) {
    const Turn* last = conv.turns.empty() ? nullptr : &conv.turns.back();
    if (last != nullptr && last->executed && last->decision.call->name == "grasp" && last->outcome.succeeded()) {
      return call("Tuck the box in with HOLD before walking.", "set_hands", {{"state", "HOLD"}});
    }
    const RootPose a = approach_from_observation(*dst, t.lateral);
    if (!near(obs, a, 0.25, 0.35)) {
      if (!hands_safe(obs)) return call("Hold the box before walking.", "set_hands", {{"state", "HOLD"}});
      return move_to(a, "Carry " + t.box + " to the " + t.dst + ".");
    }
    json params{{"surface", t.dst}};
    if (t.lateral != 0.0) params["lateral"] = t.lateral;
    return call("Place " + t.box + " on the " + t.dst + ".", "place", params);
  }
  if (!carrying.is_null()) return done("My hands are full with another object.");
  if (box->at("status") != "resting") return done(t.box + " is " + box->at("status").get<std::string>() + "; giving up.");
  const std::string support = box->value("on", "");
  const json* src = find_by_id(obs.at("furniture"), support);
  if (src == nullptr) return done(t.box + " is on the " + support + " where I cannot reach it.");
  const RootPose a = approach_from_observation(*src, 0.0);
  if (!near(obs, a, 0.6, 0.35)) {
    if (!hands_safe(obs)) return call("Hands must be in a walking posture first.", "set_hands", {{"state", "REST"}});
    return move_to(a, "Walk to the " + support + " where " + t.box + " is.");
  }
  if (hands_of(obs) != "READY") return call("Raise the hands to READY before grasping.", "set_hands", {{"state", "READY"}});
  return call("Grasp " + t.box + ".", "grasp", {{"object", t.box}});
}

// Binds "the box" references against the initial observation.
bool bind(std::vector<Subtask>& tasks, const json& obs) {
  for (auto& t : tasks) {
    if (t.kind != Subtask::Kind::kMove || !t.box.empty()) continue;
    for (const auto& b : obs.at("objects")) {
      const std::string on = b.value("on", "");
      if (b.at("status") != "resting") continue;
      const bool match = t.src.empty() ? (on != t.dst && find_by_id(obs.at("furniture"), on) != nullptr) : on == t.src;
      if (match) {
        t.box = b.at("id").get<std::string>();
        break;
      }
    }
    if (t.box.empty()) return false;
  }
  return true;
}

}  // namespace

Decision ScriptedBackend::decide(const Conversation& conv) {
  std::vector<Subtask> tasks;
  for (const auto& piece : split_pieces(normalise(conv.instruction))) {
    if (auto t = parse_piece(piece)) tasks.push_back(*t);
  }
  if (tasks.empty()) return done("I do not understand the instruction.");
  if (!bind(tasks, conv.initial_observation)) return done("I cannot find the box the instruction refers to.");

  // Identical failing calls: stop retrying.
  std::map<std::string, int> failures;
  for (const auto& turn : conv.turns) {
    if (turn.decision.call && !turn.outcome.succeeded()) {
      if (++failures[turn.decision.call->name + turn.decision.call->params.dump()] >= kGiveUpAfter) {
        return done("Giving up after repeated " + turn.decision.call->name + " failures.");
      }
    }
  }

  std::size_t active = 0;
  auto advance = [&](const json& obs) {
    while (active < tasks.size() && task_done(tasks[active], obs)) ++active;
  };
  advance(conv.initial_observation);
  for (const auto& turn : conv.turns) advance(turn.observation);
  if (active == tasks.size()) return done("The instruction is complete.");
  return step(tasks[active], conv.latest_observation(), conv);
}

// ---- goals -------------------------------------------------------------

bool GoalClause::holds(const SkillContext& ctx) const {
  const Scene& scene = ctx.sim.scene();
  switch (kind) {
    case Kind::kHands: return ctx.hands && ctx.hands->kind == hands;
    case Kind::kRootAt: {
      const RootPose& r = ctx.sim.state().root;
      return std::hypot(r.x - pose.x, r.y - pose.y) <= position_tolerance &&
             std::abs(wrap_angle(r.yaw - pose.yaw)) <= yaw_tolerance;
    }
    case Kind::kBoxOn: return scene.resting_on(box, surface);
    case Kind::kBoxInRegion: {
      const MovableBox* b = scene.find_box(box);
      return b != nullptr && b->status == ObjectStatus::kResting &&
             point_in_polygon(b->body.center.head<2>(), region);
    }
  }
  return false;
}

json GoalClause::to_json() const {
  switch (kind) {
    case Kind::kHands: return {{"hands", kind_name(hands)}};
    case Kind::kRootAt:
      return {{"root_at", {pose.x, pose.y, pose.yaw}}, {"tolerance", {position_tolerance, yaw_tolerance}}};
    case Kind::kBoxOn: return {{"box", box}, {"on", surface}};
    case Kind::kBoxInRegion: {
      json poly = json::array();
      for (const auto& p : region) poly.push_back({p.x(), p.y()});
      return {{"box", box}, {"inside", poly}};
    }
  }
  return nullptr;
}

bool TaskGoal::satisfied(const SkillContext& ctx) const {
  return !clauses.empty() &&
         std::all_of(clauses.begin(), clauses.end(), [&](const GoalClause& c) { return c.holds(ctx); });
}

std::vector<std::string> TaskGoal::objects() const {
  std::vector<std::string> out;
  for (const auto& c : clauses) {
    if (!c.box.empty()) out.push_back(c.box);
  }
  return out;
}

GoalClause GoalClause::from_json(const json& j) {
  try {
    GoalClause c;
    if (j.contains("hands")) {
      c.kind = Kind::kHands;
      c.hands = HandState::parse(j.at("hands").get<std::string>()).kind;
    } else if (j.contains("root_at")) {
      c.kind = Kind::kRootAt;
      const json& p = j.at("root_at");
      c.pose = {p.at(0).get<double>(), p.at(1).get<double>(), 0.0, p.at(2).get<double>()};
      if (j.contains("tolerance")) {
        c.position_tolerance = j.at("tolerance").at(0).get<double>();
        c.yaw_tolerance = j.at("tolerance").at(1).get<double>();
      }
    } else if (j.contains("on")) {
      c.kind = Kind::kBoxOn;
      c.box = j.at("box").get<std::string>();
      c.surface = j.at("on").get<std::string>();
    } else if (j.contains("inside")) {
      c.kind = Kind::kBoxInRegion;
      c.box = j.at("box").get<std::string>();
      const json& poly = j.at("inside");
      if (poly.size() != 4) throw ParamValidation("goal region needs 4 corners");
      for (std::size_t i = 0; i < 4; ++i) c.region[i] = {poly.at(i).at(0).get<double>(), poly.at(i).at(1).get<double>()};
    } else {
      throw ParamValidation("unrecognised goal clause " + j.dump());
    }
    return c;
  } catch (const json::exception& e) {
    throw ParamValidation(std::string("malformed goal clause: ") + e.what());
  } catch (const UnknownState& e) {
    throw ParamValidation(e.what());
  }
}

TaskGoal TaskGoal::from_json(const json& j) {
  if (!j.is_array()) throw ParamValidation("goal must be an array of clauses");
  TaskGoal g;
  for (const auto& c : j) g.clauses.push_back(GoalClause::from_json(c));
  return g;
}

json TaskGoal::to_json() const {
  json out = json::array();
  for (const auto& c : clauses) out.push_back(c.to_json());
  return out;
}

TaskGoal TaskGoal::hands(HandStateKind state) {
  GoalClause c;
  c.kind = GoalClause::Kind::kHands;
  c.hands = state;
  return {{c}};
}

TaskGoal TaskGoal::root_at(const RootPose& pose, double position_tolerance, double yaw_tolerance) {
  GoalClause c;
  c.kind = GoalClause::Kind::kRootAt;
  c.pose = pose;
  c.position_tolerance = position_tolerance;
  c.yaw_tolerance = yaw_tolerance;
  return {{c}};
}

TaskGoal TaskGoal::box_on(std::string box, std::string surface) {
  GoalClause c;
  c.kind = GoalClause::Kind::kBoxOn;
  c.box = std::move(box);
  c.surface = std::move(surface);
  return {{c}};
}

TaskGoal TaskGoal::box_beside(std::string box, const Furniture& f, double shift) {
  GoalClause c;
  c.kind = GoalClause::Kind::kBoxInRegion;
  c.box = std::move(box);
  const Eigen::Vector2d d = shift * f.left_axis().head<2>();
  const auto corners = f.body.footprint();
  for (std::size_t i = 0; i < 4; ++i) c.region[i] = corners[i] + d;
  c.surface = f.id;
  return {{c}};
}

// ---- run_task ------------------------------------------------------------

std::string to_string(TaskStop s) {
  switch (s) {
    case TaskStop::kDone: return "done";
    case TaskStop::kIterationCap: return "iteration_cap";
    case TaskStop::kInvalidCalls: return "invalid_calls";
    case TaskStop::kBackendUnavailable: return "backend_unavailable";
    case TaskStop::kAborted: return "aborted";
  }
  return "done";
}

void TaskResult::raise_if_error() const {
  if (stop == TaskStop::kIterationCap) throw IterationCap(stop_detail);
  if (stop == TaskStop::kBackendUnavailable) throw BackendUnavailable(stop_detail);
}

namespace {

json turn_json(const Turn& t, int iteration) {
  json j{{"iteration", iteration}, {"reasoning", t.decision.reasoning}};
  if (t.decision.call) {
    j["call"] = {{"name", t.decision.call->name}, {"params", t.decision.call->params}};
    j["executed"] = t.executed;
    j["outcome"] = t.outcome.to_json(false);
    j["observation"] = t.observation;
  } else {
    j["call"] = nullptr;
  }
  return j;
}

}  // namespace

TaskResult run_task(std::string_view instruction, PlannerBackend& backend, SkillContext& ctx,
                    const SkillRegistry& registry, const TaskGoal& goal, const TaskOptions& options) {
  Simulation& sim = ctx.sim;
  const double start = sim.time();
  Conversation conv;
  conv.system_prompt = build_system_prompt(sim.scene(), sim.config(), registry);
  conv.instruction = std::string(instruction);
  conv.initial_observation = observe(ctx);

  TaskResult result;
  json turns = json::array();
  int invalid_streak = 0;
  for (;;) {
    if (conv.iterations >= options.max_iterations) {
      result.stop = TaskStop::kIterationCap;
      result.stop_detail = "no result after " + std::to_string(options.max_iterations) + " iterations";
      break;
    }
    if (options.abort != nullptr && options.abort->load()) {
      result.stop = TaskStop::kAborted;
      result.stop_detail = "aborted before the next decision";
      break;
    }
    Decision d;
    try {
      d = backend.decide(conv);
    } catch (const BackendUnavailable& e) {
      result.stop = TaskStop::kBackendUnavailable;
      result.stop_detail = e.what();
      break;
    }
    ++conv.iterations;
    Turn turn;
    turn.decision = d;
    if (!d.call) {
      conv.turns.push_back(turn);
      turns.push_back(turn_json(turn, conv.iterations));
      if (options.on_turn) options.on_turn(turns.back());
      result.stop = TaskStop::kDone;
      break;
    }
    std::string invalid;
    std::string invalid_reason;
    try {
      registry.spec(d.call->name).validate(d.call->params);
    } catch (const UnknownSkill& e) {
      invalid = e.what();
      invalid_reason = "UnknownSkill";
    } catch (const ParamValidation& e) {
      invalid = e.what();
      invalid_reason = "ParamValidation";
    }
    if (!invalid.empty()) {
      turn.outcome.skill = d.call->name;
      turn.outcome.status = SkillStatus::kFailed;
      turn.outcome.reason = invalid_reason;
      turn.outcome.detail = invalid;
      turn.outcome.start_tick = sim.state().tick;
      ++invalid_streak;
    } else {
      invalid_streak = 0;
      turn.outcome = registry.execute(d.call->name, d.call->params, ctx);
      turn.executed = true;
      ++result.steps;
    }
    turn.observation = observe(ctx, &turn.outcome);
    conv.turns.push_back(turn);
    turns.push_back(turn_json(turn, conv.iterations));
    if (options.on_turn) options.on_turn(turns.back());
    if (turn.outcome.status == SkillStatus::kAborted) {
      result.stop = TaskStop::kAborted;
      result.stop_detail = turn.outcome.detail;
      break;
    }
    if (invalid_streak > options.max_correction_rounds) {
      result.stop = TaskStop::kInvalidCalls;
      result.stop_detail = "invalid tool calls after " + std::to_string(options.max_correction_rounds) +
                           " correction rounds";
      break;
    }
  }
  result.iterations = conv.iterations;
  result.elapsed_sim_time = sim.time() - start;
  result.success = goal.satisfied(ctx);
  result.transcript = {{"instruction", conv.instruction},
                       {"backend", backend.name()},
                       {"goal", goal.to_json()},
                       {"initial_observation", conv.initial_observation},
                       {"turns", turns},
                       {"stop", to_string(result.stop)},
                       {"success", result.success},
                       {"steps", result.steps},
                       {"elapsed_sim_time", result.elapsed_sim_time}};
  if (!result.stop_detail.empty()) result.transcript["stop_detail"] = result.stop_detail;
  return result;
}

// ---- system prompt -------------------------------------------------------

namespace {

std::string f2(double v) {
  if (std::abs(v) < 0.005) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string vec2(double a, double b) { return "(" + f2(a) + ", " + f2(b) + ")"; }
std::string vec3(const Vec3& v) { return "(" + f2(v.x()) + ", " + f2(v.y()) + ", " + f2(v.z()) + ")"; }

}  // namespace

std::string build_system_prompt(const Scene& scene, const Config& cfg, const SkillRegistry& registry) {
  std::ostringstream p;
  p << "You are the task manager of a humanoid robot. You complete the user's instruction by calling one "
       "skill at a time. After each call you receive an observation of the robot and the room; use it to "
       "decide the next call. Reply without a tool call once the instruction is complete.\n\n";

  p << "## Coordinate frames\n"
       "- World frame: origin at the room centre, x and y on the floor, z up. Metres and radians; yaw is "
       "measured counter-clockwise from +x.\n"
       "- Root frame: attached to the robot pelvis, x forward, y to the robot's left, z up.\n"
       "- Each furniture piece has its own frame: its front face looks along front_yaw, and its left axis "
       "is front_yaw + pi/2. \"Left of\" a piece means along its left axis.\n\n";

  p << "## Room\n";
  p << "Square room of " << f2(scene.room_size) << " m x " << f2(scene.room_size) << " m.\n";
  p << "Furniture:\n";
  if (scene.furniture.empty()) p << "- none\n";
  for (const auto& f : scene.furniture) {
    const Vec3 n = f.front_normal();
    const RootPose a = approach_pose(f, kApproachStandoff, 0.0, 0.0);
    p << "- " << f.id << ": centre " << vec2(f.body.center.x(), f.body.center.y()) << ", depth "
      << f2(2 * f.body.half_extents.x()) << " m, width " << f2(2 * f.body.half_extents.y())
      << " m, surface height " << f2(f.height()) << " m, front_yaw " << f2(std::atan2(n.y(), n.x()))
      << "; approach pose (x, y, theta) = (" << f2(a.x) << ", " << f2(a.y) << ", " << f2(a.yaw) << ")\n";
  }
  p << "Objects (ground-truth positions):\n";
  if (scene.boxes.empty()) p << "- none\n";
  for (const auto& b : scene.boxes) {
    p << "- " << b.id << ": position " << vec3(b.body.center) << ", size "
      << vec3(2.0 * b.body.half_extents) << ", " << to_string(b.status) << " on " << b.support << "\n";
  }
  p << "\n";

  p << "## Hand states\n"
       "| state | left hand (root frame) | right hand (root frame) | walking allowed |\n"
       "|---|---|---|---|\n";
  for (const HandState& h : {HandState::rest(), HandState::hold(), HandState::ready(), HandState::grasp(0.3)}) {
    const auto [l, r] = hand_targets(h, cfg.hands);
    p << "| " << h.name() << " | " << vec3(l.position) << " | " << vec3(r.position) << " | "
      << (h.locomotion_safe() ? "yes" : "no") << " |\n";
  }
  p << "GRASP is shown for a 0.30 m wide object; its width and height are parameters.\n"
       "move_to is refused unless the hands are in REST or HOLD. After ee_goto or stub_planner the hands "
       "are in a custom posture; call set_hands before walking.\n\n";

  p << "## Recommended pick-and-place sequence\n"
       "1. move_to the approach pose of the furniture holding the box (0.5 m in front of its front face, "
       "facing it).\n"
       "2. set_hands READY.\n"
       "3. grasp the box.\n"
       "4. set_hands HOLD.\n"
       "5. move_to the approach pose of the destination furniture. For \"left of\" or \"right of\" a piece, "
       "shift the approach pose by +0.3 m or -0.3 m along that piece's left axis.\n"
       "6. place on the destination surface, passing the same lateral offset.\n"
       "A failed skill reports a reason in last_outcome. Re-read the observation before retrying.\n\n";

  p << "## Tools\n" << registry.tool_schemas().dump(2) << "\n";
  return p.str();
}

// ---- failure classification ----------------------------------------------

std::string to_string(FailureCategory c) {
  switch (c) {
    case FailureCategory::kNone: return "none";
    case FailureCategory::kLlmError: return "llm_error";
    case FailureCategory::kManipulation: return "manipulation";
    case FailureCategory::kLocomotion: return "locomotion";
  }
  return "none";
}

FailureCategory classify_failure(const TaskResult& result, const Scene& final_scene, const TaskGoal& goal) {
  if (result.success) return FailureCategory::kNone;
  static const std::vector<std::string> llm_reasons = {
      "UnknownSkill", "ParamValidation", "UnknownObject", "SafetyViolation",
      "OutOfReach",   "NotCarried",      "HandsFull",     "InvalidPlacement"};
  const auto goal_objects = goal.objects();
  const json& turns = result.transcript.at("turns");

  struct Span {
    std::string skill;
    std::uint64_t begin, end;
    std::string reason;
  };
  std::vector<Span> spans;
  bool llm = result.stop == TaskStop::kInvalidCalls;
  bool manipulation = false;
  bool locomotion = false;
  for (const auto& t : turns) {
    if (t.at("call").is_null()) continue;
    const json& o = t.at("outcome");
    const std::string name = t.at("call").at("name");
    const std::string reason = o.value("reason", "");
    if (std::find(llm_reasons.begin(), llm_reasons.end(), reason) != llm_reasons.end()) llm = true;
    if (name == "grasp" && !goal_objects.empty()) {
      const json& params = t.at("call").at("params");
      const std::string obj = params.is_object() ? params.value("object", "") : "";
      if (std::find(goal_objects.begin(), goal_objects.end(), obj) == goal_objects.end()) llm = true;
    }
    if (reason == "GraspFailed" || (name == "place" && reason == "Dropped")) manipulation = true;
    if (name == "move_to" && (reason == "NoPath" || reason == "StartBlocked" || reason == "Unreachable")) {
      locomotion = true;
    }
    const std::uint64_t begin = o.at("start_tick").get<std::uint64_t>();
    spans.push_back({name, begin, begin + o.at("ticks").get<std::uint64_t>(), reason});
  }
  for (const auto& e : final_scene.events) {
    if (e.type != "drop") continue;
    for (const auto& s : spans) {
      if (e.tick < s.begin || e.tick > s.end) continue;
      if (s.skill == "move_to") locomotion = true;
      if (s.skill == "place" || s.skill == "grasp" || s.skill == "set_hands") manipulation = true;
    }
  }
  if (llm) return FailureCategory::kLlmError;
  if (manipulation) return FailureCategory::kManipulation;
  if (locomotion) return FailureCategory::kLocomotion;
  return FailureCategory::kLlmError;
}

}  // namespace eeroot
