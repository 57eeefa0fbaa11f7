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

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eeroot/hand_state.hpp"
#include "eeroot/locomotion.hpp"
#include "eeroot/types.hpp"
#include "eeroot/world.hpp"

namespace eeroot {

/// Semantic parameter types. All but pose and trajectory travel as JSON
/// numbers or strings.
enum class ParamType { kNumber, kString, kEnum, kObjectId, kSurfaceId, kPose, kTrajectory };
std::string to_string(ParamType t);

struct ParamSpec {
  std::string name;
  ParamType type = ParamType::kNumber;
  std::string unit;  // "m", "rad" or empty
  std::string description;
  std::optional<double> minimum;
  std::optional<double> maximum;
  std::vector<std::string> choices;  // kEnum only
  bool required = true;
  nlohmann::json default_value;  // used when optional and absent

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// A typed, registered skill. `allowed_hands` empty means any hand state,
/// including a custom posture.
struct SkillSpec {
  std::string name;
  std::string description;
  std::vector<ParamSpec> params;
  std::vector<HandStateKind> allowed_hands;

  bool permits(const std::optional<HandState>& hands) const;

  /// Function-calling tool description (JSON-schema parameters). Units,
  /// semantic types and the safety requirement travel in x- keys.
  nlohmann::json tool_schema() const;
  static SkillSpec from_tool_schema(const nlohmann::json& j);

  /// Checks `params` against the schema and returns them with defaults filled
  /// in. Throws ParamValidation.
  nlohmann::json validate(const nlohmann::json& params) const;

  friend bool operator==(const SkillSpec&, const SkillSpec&) = default;
};

enum class SkillStatus { kSucceeded, kFailed, kAborted };
std::string to_string(SkillStatus s);

struct SkillOutcome {
  std::string skill;
  SkillStatus status = SkillStatus::kSucceeded;
  std::string reason;  // failure code, e.g. GraspFailed, Dropped, NoPath
  std::string detail;
  std::uint64_t start_tick = 0;
  std::uint64_t ticks = 0;
  nlohmann::json observation;

  bool succeeded() const { return status == SkillStatus::kSucceeded; }
  nlohmann::json to_json(bool with_observation = true) const;
};

/// State shared by consecutive skills on one simulation.
struct SkillContext {
  explicit SkillContext(Simulation& simulation) : sim(simulation) {}

  Simulation& sim;
  /// Current canonical hand state; empty for a custom posture.
  std::optional<HandState> hands = HandState::rest();
  /// Observers: every skill-rate command, and every control tick.
  std::function<void(const EeRootCommand&)> on_command;
  std::function<void(const Simulation&)> on_tick;
  /// move_to reports its planned path when tracking starts and nullptr when it ends.
  std::function<void(const PlannedPath*)> on_path;
  /// Polled once per command; set to abort the running skill.
  const std::atomic<bool>* abort = nullptr;
};

/// Compact robot and scene observation for the task manager. Object poses are
/// scene ground truth.
nlohmann::json observe(const SkillContext& ctx, const SkillOutcome* last = nullptr);

/// Execution handle given to skill bodies: emits commands at the skill rate and
/// steps the simulation between them.
class SkillRun {
 public:
  SkillRun(SkillContext& ctx, double timeout);

  SkillContext& context() { return ctx_; }
  Simulation& sim() { return ctx_.sim; }
  const Config& config() const { return ctx_.sim.config(); }

  /// Sends one command and advances to the next skill period. Throws Timeout
  /// past the skill deadline and Aborted when the abort flag is set.
  void emit(const EeRootCommand& cmd);

  /// Emits `cmd` until the root and both EEs have settled on it, or
  /// `max_seconds` pass. Returns whether it settled.
  bool settle(const EeRootCommand& cmd, double max_seconds = 10.0, double position_tol = 0.02,
              double yaw_tol = 0.05);

  double elapsed() const;
  std::uint64_t start_tick() const { return start_tick_; }

 private:
  SkillContext& ctx_;
  double timeout_;
  std::uint64_t start_tick_;
  std::uint64_t emitted_ = 0;
};

/// Body result: empty reason means success.
struct SkillResult {
  std::string reason;
  std::string detail;

  static SkillResult ok() { return {}; }
  static SkillResult fail(std::string reason, std::string detail = {}) {
    return {std::move(reason), std::move(detail)};
  }
};

using SkillBody = std::function<SkillResult(SkillRun&, const nlohmann::json& params)>;

class SkillRegistry {
 public:
  /// Registry holding move_to, set_hands, grasp, place, ee_goto and stub_planner.
  static SkillRegistry builtin();

  /// Throws Error on a duplicate name.
  void add(SkillSpec spec, SkillBody body);

  bool contains(std::string_view name) const;
  /// Throws UnknownSkill.
  const SkillSpec& spec(std::string_view name) const;
  std::vector<SkillSpec> specs() const;
  /// Array of tool schemas in registration order.
  nlohmann::json tool_schemas() const;

  /// Runs the skill to completion. Throws UnknownSkill, ParamValidation,
  /// SafetyViolation, Timeout and Aborted; body failures come back as a
  /// Failed outcome.
  SkillOutcome invoke(std::string_view name, const nlohmann::json& params, SkillContext& ctx) const;

  /// As invoke, but every error becomes the outcome's status and reason.
  SkillOutcome execute(std::string_view name, const nlohmann::json& params,
                       SkillContext& ctx) const noexcept;

 private:
  struct Entry {
    SkillSpec spec;
    SkillBody body;
  };
  std::vector<Entry> entries_;
};

/// Root pose that places the EE midpoint, in the GRASP posture, at `midpoint`
/// while facing `yaw`. Returns the root and the GRASP height it needs.
std::pair<RootPose, double> grasp_root_for(const Vec3& midpoint, double yaw, const Config& cfg);

enum class TeleopMode { kIndependent, kMirrored };
std::string to_string(TeleopMode m);
TeleopMode parse_teleop_mode(std::string_view s);

/// One teleop message: held keys and/or direct deltas. In mirrored mode only
/// `left` is read and mirrored onto the right hand.
struct TeleopInput {
  std::vector<std::string> keys;
  Vec3 left = Vec3::Zero();
  Vec3 right = Vec3::Zero();
  /// Root deltas in the root frame: forward, strafe (left +), height, yaw.
  Eigen::Vector4d root = Eigen::Vector4d::Zero();
  /// Independent-mode key target: "both", "left" or "right".
  std::string hand = "both";
};

struct TeleopSteps {
  double ee = 0.01;      // m per message
  double planar = 0.05;  // m per message
  double height = 0.02;  // m per message
  double yaw = 0.1;      // rad per message
};

/// Applies a teleop message to the current command. Root height is clamped to
/// the configured limits; EE targets are root-frame.
EeRootCommand teleop_map(const EeRootCommand& current, const TeleopInput& input, TeleopMode mode,
                         const RootLimits& limits = {}, const TeleopSteps& steps = {});

}  // namespace eeroot
