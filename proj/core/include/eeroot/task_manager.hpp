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
#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eeroot/skills.hpp"

namespace eeroot {

struct SkillCall {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  friend bool operator==(const SkillCall&, const SkillCall&) = default;
};

/// One backend decision: a call, or done when `call` is empty.
struct Decision {
  std::string reasoning;
  std::optional<SkillCall> call;
};

/// A decision plus the observation that answered it. Calls that failed
/// validation are recorded with `executed` false and never reach the robot.
struct Turn {
  Decision decision;
  bool executed = false;
  SkillOutcome outcome;
  nlohmann::json observation;
};

struct Conversation {
  std::string system_prompt;
  std::string instruction;
  nlohmann::json initial_observation;
  std::vector<Turn> turns;
  int iterations = 0;

  /// Observation after the most recent turn, or the initial one.
  const nlohmann::json& latest_observation() const;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual std::string name() const = 0;
  /// Throws BackendUnavailable.
  virtual Decision decide(const Conversation& conversation) = 0;
};

/// Rule-based backend. Objects named in the instruction are bound from the
/// initial observation; each step then reacts to the latest observation, so a
/// decision is a pure function of the conversation.
class ScriptedBackend : public PlannerBackend {
 public:
  explicit ScriptedBackend(Config cfg = Config{}) : cfg_(std::move(cfg)) {}
  std::string name() const override { return "scripted"; }
  Decision decide(const Conversation& conversation) override;

 private:
  Config cfg_;
};

struct LlmOptions {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string model = "gpt-4o";
  std::string api_key;  // empty: read EEROOT_LLM_API_KEY
  double timeout = 30.0;
  int retries = 3;

  static LlmOptions from_config(const TaskParams& p);
};

/// Chat-completions client with a tools array. Observations are returned to
/// the model as tool messages.
class LlmBackend : public PlannerBackend {
 public:
  LlmBackend(LlmOptions options, nlohmann::json tools);
  std::string name() const override { return "llm"; }
  Decision decide(const Conversation& conversation) override;

  /// Request body for the conversation so far.
  nlohmann::json request(const Conversation& conversation) const;
  /// Reasoning and first tool call of a chat-completions response.
  static Decision parse_response(const nlohmann::json& response);

 private:
  LlmOptions options_;
  nlohmann::json tools_;
};

/// Tool schemas with the x- annotation keys removed, as sent to the model.
nlohmann::json plain_tool_schemas(const nlohmann::json& tools);

/// Scene predicates judging a task, all of which must hold.
struct GoalClause {
  enum class Kind { kHands, kRootAt, kBoxOn, kBoxInRegion };
  Kind kind = Kind::kHands;
  HandStateKind hands = HandStateKind::kRest;
  RootPose pose;
  double position_tolerance = 0.2;
  double yaw_tolerance = 0.3;
  std::string box;
  std::string surface;
  std::array<Eigen::Vector2d, 4> region{};  // CCW polygon for kBoxInRegion

  bool holds(const SkillContext& ctx) const;
  nlohmann::json to_json() const;
  /// Inverse of to_json. Throws ParamValidation.
  static GoalClause from_json(const nlohmann::json& j);
};

struct TaskGoal {
  std::vector<GoalClause> clauses;

  bool satisfied(const SkillContext& ctx) const;
  /// Boxes the goal refers to.
  std::vector<std::string> objects() const;
  nlohmann::json to_json() const;
  static TaskGoal from_json(const nlohmann::json& j);

  static TaskGoal hands(HandStateKind state);
  static TaskGoal root_at(const RootPose& pose, double position_tolerance = 0.2, double yaw_tolerance = 0.3);
  static TaskGoal box_on(std::string box, std::string surface);
  /// Box centre inside the furniture footprint shifted `shift` m along its left axis.
  static TaskGoal box_beside(std::string box, const Furniture& f, double shift);
};

enum class TaskStop { kDone, kIterationCap, kInvalidCalls, kBackendUnavailable, kAborted };
std::string to_string(TaskStop s);

struct TaskResult {
  bool success = false;  // goal predicate, never the backend's own claim
  int steps = 0;         // executed skill invocations
  int iterations = 0;    // backend decisions
  double elapsed_sim_time = 0.0;
  TaskStop stop = TaskStop::kDone;
  std::string stop_detail;
  nlohmann::json transcript;

  /// Throws IterationCap or BackendUnavailable for those stops.
  void raise_if_error() const;
};

struct TaskOptions {
  int max_iterations = 40;
  int max_correction_rounds = 3;  // invalid calls returned to the backend before giving up
  /// Called after every turn with the transcript entry (for live tracing).
  std::function<void(const nlohmann::json&)> on_turn;
  /// Checked before every decision; an aborted skill also ends the task.
  const std::atomic<bool>* abort = nullptr;
};

/// Reason-act-observe loop on a live skill context.
TaskResult run_task(std::string_view instruction, PlannerBackend& backend, SkillContext& ctx,
                    const SkillRegistry& registry, const TaskGoal& goal, const TaskOptions& options = {});

/// Deterministic prompt: frames, furniture and object poses, hand states,
/// the pick-and-place recipe and the tool schemas.
std::string build_system_prompt(const Scene& scene, const Config& cfg, const SkillRegistry& registry);

enum class FailureCategory { kNone, kLlmError, kManipulation, kLocomotion };
std::string to_string(FailureCategory c);

/// Fixed-priority failure rules over a transcript and the final scene events.
FailureCategory classify_failure(const TaskResult& result, const Scene& final_scene, const TaskGoal& goal);

}  // namespace eeroot
