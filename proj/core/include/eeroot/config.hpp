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

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "eeroot/types.hpp"

namespace eeroot {

/// Cartesian impedance gains. Only the stiffness enters the quasi-static
/// compliant target; damping and inertia are carried along.
class ImpedanceGains {
 public:
  ImpedanceGains();
  /// Throws SingularGains unless stiffness is symmetric positive-definite.
  ImpedanceGains(const Mat3& stiffness, const Mat3& damping, const Mat3& inertia);

  static ImpedanceGains uniform(double stiffness);

  const Mat3& stiffness() const { return stiffness_; }
  const Mat3& damping() const { return damping_; }
  const Mat3& inertia() const { return inertia_; }

 private:
  Mat3 stiffness_;
  Mat3 damping_;
  Mat3 inertia_;
};

struct RobotGeometry {
  double shoulder_lateral = 0.15;
  double shoulder_height = 0.35;
  double upper_arm = 0.22;
  double forearm = 0.20;
  double hand = 0.08;
  double joint_limit = 2.6;
  double joint_velocity_limit = 4.0;
};

struct RootLimits {
  double z_min = 0.40;
  double z_max = 0.80;
  double z_nominal = 0.70;
  double max_planar_speed = 0.8;
  double max_vertical_speed = 0.3;
  double max_yaw_rate = 1.5;
  double gain = 8.0;  // 1/s, proportional gain before saturation
};

struct IkParams {
  double damping = 0.05;
  double position_weight = 1.0;
  double orientation_weight = 0.5;
};

struct ComplianceParams {
  double contact_stiffness = 500.0;  // k_s, N/m
  double filter_time_constant = 0.1;
  bool filter_enabled = true;
};

struct HandStateTable {
  Vec3 rest{0.05, 0.25, -0.10};
  Vec3 hold{0.25, 0.12, 0.10};
  Vec3 ready{0.30, 0.20, 0.15};
  double grasp_forward = 0.32;
  double grasp_height = 0.10;
  double squeeze_margin = 0.01;
};

struct GraspParams {
  double tolerance = 0.06;
  double carry_slack = 0.08;
  double carry_slack_time = 0.2;
  double place_height_tolerance = 0.10;
  double place_clearance = 0.05;
  double approach_offset = 0.35;
  double place_depth = 0.20;
};

struct PlannerParams {
  double resolution = 0.05;
  double inflation_radius = 0.35;
  double arc_length = 0.25;
  double max_curvature = 2.0;
  double reverse_cost = 2.0;
  double rotation_step = 0.17453292519943295;  // 10 degrees
  double rotation_cost = 0.05;
  int heading_bins = 36;
  double goal_position_tolerance = 0.10;
  double goal_heading_tolerance = 0.15;
  double lookahead = 0.4;
  int max_expansions = 2000000;
};

struct TaskParams {
  int max_iterations = 40;
  double skill_timeout = 60.0;
  std::string llm_endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string llm_model = "gpt-4o";
  double llm_timeout = 30.0;
  int llm_retries = 3;
};

struct Config {
  double timestep = 0.02;
  double skill_rate = 15.0;
  ImpedanceGains gains;
  RobotGeometry robot;
  RootLimits root;
  IkParams ik;
  ComplianceParams compliance;
  HandStateTable hands;
  GraspParams grasp;
  PlannerParams planner;
  TaskParams task;

  /// Throws ConfigError on violated invariants.
  void validate() const;

  static Config from_json(const nlohmann::json& j);
  static Config load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

}  // namespace eeroot
