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
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eeroot/config.hpp"
#include "eeroot/kinematics.hpp"
#include "eeroot/task_manager.hpp"

namespace eeroot {

// ---- tracking metrics ------------------------------------------------------

struct TrackingErrors {
  double position_rmse = 0.0;  // m, per-tick Euclidean error pooled over both EEs
  double position_std = 0.0;
  double rotation_rmse = 0.0;  // rad, geodesic angle
  double rotation_std = 0.0;
};

/// Throws LengthMismatch unless both trajectories have the same length.
TrackingErrors tracking_error(std::span<const EePoses> reference, std::span<const EePoses> actual);

/// RMS over time of the jerk vector norm, jerk from the backward third difference
/// (p_t - 3p_{t-1} + 3p_{t-2} - p_{t-3}) / dt^3. Throws TooFewSamples below 4
/// samples, ConfigError for dt <= 0.
double rms_jerk(std::span<const Vec3> positions, double dt);
/// Same, pooled over both EEs.
double rms_jerk(std::span<const EePoses> poses, double dt);

// ---- tracking suite --------------------------------------------------------

struct TrackingOptions {
  int trajectories = 100;
  std::uint64_t seed = 0;
  double duration = 6.0;          // s per trajectory
  double max_task_speed = 0.5;    // m/s, EE reference speed bound
  bool forces = false;            // external force pulses on both EEs
  bool filter = true;             // compliance low-pass
  bool zero_motion = false;       // hold the initial posture
  bool record = false;            // keep per-tick samples

  nlohmann::json to_json() const;
};

struct TrajectorySample {
  EePoses reference;  // commanded EE poses in the world (actual root frame)
  EePoses actual;
  RootPose root_reference;
  RootPose root;
};

struct TrajectoryResult {
  std::uint64_t seed = 0;
  TrackingErrors errors;
  double rms_jerk = 0.0;           // m/s^3
  double root_position_rmse = 0.0; // m
  double max_reference_speed = 0.0;
  bool joint_limits_respected = true;
  std::vector<TrajectorySample> samples;  // only with record
};

struct TrackingReport {
  TrackingOptions options;
  TrackingErrors errors;     // pooled over all trajectories
  double rms_jerk = 0.0;     // pooled
  double rms_jerk_std = 0.0; // across trajectories
  bool joint_limits_respected = true;
  std::vector<TrajectoryResult> per_trajectory;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Seeded smooth references: joint-space sums of low-frequency sinusoids kept
/// inside the joint limits, mapped through FK (so every sample is reachable)
/// and time-scaled to the task speed bound; the root drifts on its own
/// sinusoids. Each reference is rolled out through the controller.
TrackingReport run_tracking_suite(const TrackingOptions& options, const Config& cfg = Config{});

/// One trajectory of the suite; trajectory i of a suite uses seed options.seed + i.
TrajectoryResult run_tracking_trajectory(std::uint64_t seed, const TrackingOptions& options,
                                         const Config& cfg = Config{});

// ---- system suite ----------------------------------------------------------

enum class TaskCategory {
  kSimpleArm,
  kSimpleNav,
  kExplicitPlacement,
  kLinguisticVariation,
  kSpatialRelation,
  kLongHorizon2Obj,
};
std::string to_string(TaskCategory c);
/// Throws ParamValidation for unknown names.
TaskCategory parse_task_category(std::string_view name);
std::vector<TaskCategory> all_task_categories();

/// Fixed paraphrase templates per category; placeholders {box}, {src}, {dst},
/// {side}, {state}, {box2}, {src2}, {dst2}.
const std::vector<std::string>& paraphrases(TaskCategory c);
/// Explicit templates per category.
const std::vector<std::string>& explicit_templates(TaskCategory c);

/// A sampled trial: scene seed, instruction, goal and any setup skill calls.
struct TrialSpec {
  std::uint64_t seed = 0;
  std::string instruction;
  TaskGoal goal;
  std::vector<SkillCall> setup;
};

TrialSpec make_trial(TaskCategory category, std::uint64_t seed, int index, bool paraphrased,
                     const Config& cfg = Config{});

struct SystemOptions {
  TaskCategory category = TaskCategory::kExplicitPlacement;
  int trials = 30;
  std::uint64_t seed = 0;
  std::string backend = "scripted";  // scripted | llm
  LlmOptions llm;
  /// Simple categories: use the paraphrase list instead of the explicit templates.
  bool paraphrased = false;
  int workers = 1;
  bool keep_transcripts = false;
  std::function<void(int index, const nlohmann::json& trial)> on_trial;
};

struct TrialResult {
  std::uint64_t seed = 0;
  std::string instruction;
  bool success = false;
  int steps = 0;
  double sim_time = 0.0;
  TaskStop stop = TaskStop::kDone;
  FailureCategory failure = FailureCategory::kNone;
  nlohmann::json transcript;  // only with keep_transcripts

  nlohmann::json to_json() const;
};

struct SystemReport {
  TaskCategory category = TaskCategory::kExplicitPlacement;
  std::string backend;
  bool paraphrased = false;
  int trials = 0;
  int successes = 0;
  double mean_steps = 0.0;     // over successful trials
  double mean_sim_time = 0.0;  // over successful trials, s
  std::map<FailureCategory, int> failures;
  std::vector<TrialResult> per_trial;

  double success_rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
  nlohmann::json to_json() const;
  std::string table() const;
};

/// Seeded trials judged by scene predicates; trial i uses scene seed seed + i.
/// Results are ordered by trial index regardless of the worker count.
SystemReport run_system_suite(const SystemOptions& options, const Config& cfg = Config{});

/// Rows shaped like a success / steps / time table for several reports.
std::string system_table(std::span<const SystemReport> reports);

}  // namespace eeroot
