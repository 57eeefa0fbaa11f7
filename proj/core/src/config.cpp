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

#include "eeroot/config.hpp"

#include <fstream>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "eeroot/errors.hpp"

namespace eeroot {

using nlohmann::json;

ImpedanceGains::ImpedanceGains()
    : stiffness_(Mat3::Identity() * 100.0),
      damping_(Mat3::Identity() * 20.0),
      inertia_(Mat3::Identity()) {}

ImpedanceGains::ImpedanceGains(const Mat3& stiffness, const Mat3& damping, const Mat3& inertia)
    : stiffness_(stiffness), damping_(damping), inertia_(inertia) {
  if (!stiffness.allFinite()) throw SingularGains("stiffness has non-finite entries");
  const double scale = std::max(1.0, stiffness.cwiseAbs().maxCoeff());
  if ((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw SingularGains("stiffness is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(stiffness);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw SingularGains("stiffness is not positive-definite");
  }
}

ImpedanceGains ImpedanceGains::uniform(double stiffness) {
  return {Mat3::Identity() * stiffness, Mat3::Identity() * 2.0 * std::sqrt(std::max(stiffness, 0.0)),
          Mat3::Identity()};
}

void Config::validate() const {
  if (!(timestep > 0.0)) throw ConfigError("timestep must be positive");
  if (!(skill_rate > 0.0) || skill_rate > 1.0 / timestep + 1e-9) {
    throw ConfigError("skill_rate must be positive and not exceed the control rate");
  }
  if (!(root.z_min < root.z_max)) throw ConfigError("root z range is empty");
  if (!(robot.joint_limit > 0.0) || !std::isfinite(robot.joint_limit)) {
    throw ConfigError("joint limits must be finite and positive");
  }
  if (!(robot.joint_velocity_limit > 0.0)) throw ConfigError("joint velocity limit must be positive");
  if (!(ik.damping > 0.0)) throw ConfigError("IK damping must be positive");
  if (!(compliance.contact_stiffness > 0.0)) throw ConfigError("contact stiffness must be positive");
  if (!(compliance.filter_time_constant > 0.0)) throw ConfigError("filter time constant must be positive");
  if (planner.heading_bins < 4) throw ConfigError("heading_bins too small");
  if (task.max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
}

namespace {

Mat3 mat3_from_json(const json& j) {
  Mat3 m;
  if (j.is_array() && j.size() == 3 && j[0].is_number()) {
    m = Mat3::Zero();
    for (int i = 0; i < 3; ++i) m(i, i) = j[i].get<double>();
    return m;
  }
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected 3x3 matrix or 3-vector diagonal");
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) throw ConfigError("expected 3x3 matrix");
    for (int c = 0; c < 3; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json mat3_to_json(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return out;
}

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void read_vec(const json& j, const char* key, Vec3& field) {
  if (j.contains(key)) field = vec3_from_json(j.at(key));
}

}  // namespace

Config Config::from_json(const json& j) {
  Config c;
  try {
    read(j, "timestep", c.timestep);
    read(j, "skill_rate", c.skill_rate);
    if (j.contains("gains")) {
      const json& g = j.at("gains");
      Mat3 kp = g.contains("stiffness") ? mat3_from_json(g.at("stiffness")) : c.gains.stiffness();
      Mat3 kd = g.contains("damping") ? mat3_from_json(g.at("damping")) : c.gains.damping();
      Mat3 km = g.contains("inertia") ? mat3_from_json(g.at("inertia")) : c.gains.inertia();
      c.gains = ImpedanceGains(kp, kd, km);
    }
    if (j.contains("robot")) {
      const json& r = j.at("robot");
      read(r, "shoulder_lateral", c.robot.shoulder_lateral);
      read(r, "shoulder_height", c.robot.shoulder_height);
      read(r, "upper_arm", c.robot.upper_arm);
      read(r, "forearm", c.robot.forearm);
      read(r, "hand", c.robot.hand);
      read(r, "joint_limit", c.robot.joint_limit);
      read(r, "joint_velocity_limit", c.robot.joint_velocity_limit);
    }
    if (j.contains("root")) {
      const json& r = j.at("root");
      read(r, "z_min", c.root.z_min);
      read(r, "z_max", c.root.z_max);
      read(r, "z_nominal", c.root.z_nominal);
      read(r, "max_planar_speed", c.root.max_planar_speed);
      read(r, "max_vertical_speed", c.root.max_vertical_speed);
      read(r, "max_yaw_rate", c.root.max_yaw_rate);
      read(r, "gain", c.root.gain);
    }
    if (j.contains("ik")) {
      const json& r = j.at("ik");
      read(r, "damping", c.ik.damping);
      read(r, "position_weight", c.ik.position_weight);
      read(r, "orientation_weight", c.ik.orientation_weight);
    }
    if (j.contains("compliance")) {
      const json& r = j.at("compliance");
      read(r, "contact_stiffness", c.compliance.contact_stiffness);
      read(r, "filter_time_constant", c.compliance.filter_time_constant);
      read(r, "filter_enabled", c.compliance.filter_enabled);
    }
    if (j.contains("hands")) {
      const json& r = j.at("hands");
      read_vec(r, "rest", c.hands.rest);
      read_vec(r, "hold", c.hands.hold);
      read_vec(r, "ready", c.hands.ready);
      read(r, "grasp_forward", c.hands.grasp_forward);
      read(r, "grasp_height", c.hands.grasp_height);
      read(r, "squeeze_margin", c.hands.squeeze_margin);
    }
    if (j.contains("grasp")) {
      const json& r = j.at("grasp");
      read(r, "tolerance", c.grasp.tolerance);
      read(r, "carry_slack", c.grasp.carry_slack);
      read(r, "carry_slack_time", c.grasp.carry_slack_time);
      read(r, "place_height_tolerance", c.grasp.place_height_tolerance);
      read(r, "place_clearance", c.grasp.place_clearance);
      read(r, "approach_offset", c.grasp.approach_offset);
      read(r, "place_depth", c.grasp.place_depth);
    }
    if (j.contains("planner")) {
      const json& r = j.at("planner");
      read(r, "resolution", c.planner.resolution);
      read(r, "inflation_radius", c.planner.inflation_radius);
      read(r, "arc_length", c.planner.arc_length);
      read(r, "max_curvature", c.planner.max_curvature);
      read(r, "reverse_cost", c.planner.reverse_cost);
      read(r, "rotation_step", c.planner.rotation_step);
      read(r, "rotation_cost", c.planner.rotation_cost);
      read(r, "heading_bins", c.planner.heading_bins);
      read(r, "goal_position_tolerance", c.planner.goal_position_tolerance);
      read(r, "goal_heading_tolerance", c.planner.goal_heading_tolerance);
      read(r, "lookahead", c.planner.lookahead);
      read(r, "max_expansions", c.planner.max_expansions);
    }
    if (j.contains("task")) {
      const json& r = j.at("task");
      read(r, "max_iterations", c.task.max_iterations);
      read(r, "skill_timeout", c.task.skill_timeout);
      read(r, "llm_endpoint", c.task.llm_endpoint);
      read(r, "llm_model", c.task.llm_model);
      read(r, "llm_timeout", c.task.llm_timeout);
      read(r, "llm_retries", c.task.llm_retries);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json Config::to_json() const {
  auto v3 = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  return {
      {"timestep", timestep},
      {"skill_rate", skill_rate},
      {"gains",
       {{"stiffness", mat3_to_json(gains.stiffness())},
        {"damping", mat3_to_json(gains.damping())},
        {"inertia", mat3_to_json(gains.inertia())}}},
      {"robot",
       {{"shoulder_lateral", robot.shoulder_lateral},
        {"shoulder_height", robot.shoulder_height},
        {"upper_arm", robot.upper_arm},
        {"forearm", robot.forearm},
        {"hand", robot.hand},
        {"joint_limit", robot.joint_limit},
        {"joint_velocity_limit", robot.joint_velocity_limit}}},
      {"root",
       {{"z_min", root.z_min},
        {"z_max", root.z_max},
        {"z_nominal", root.z_nominal},
        {"max_planar_speed", root.max_planar_speed},
        {"max_vertical_speed", root.max_vertical_speed},
        {"max_yaw_rate", root.max_yaw_rate},
        {"gain", root.gain}}},
      {"ik",
       {{"damping", ik.damping},
        {"position_weight", ik.position_weight},
        {"orientation_weight", ik.orientation_weight}}},
      {"compliance",
       {{"contact_stiffness", compliance.contact_stiffness},
        {"filter_time_constant", compliance.filter_time_constant},
        {"filter_enabled", compliance.filter_enabled}}},
      {"hands",
       {{"rest", v3(hands.rest)},
        {"hold", v3(hands.hold)},
        {"ready", v3(hands.ready)},
        {"grasp_forward", hands.grasp_forward},
        {"grasp_height", hands.grasp_height},
        {"squeeze_margin", hands.squeeze_margin}}},
      {"grasp",
       {{"tolerance", grasp.tolerance},
        {"carry_slack", grasp.carry_slack},
        {"carry_slack_time", grasp.carry_slack_time},
        {"place_height_tolerance", grasp.place_height_tolerance},
        {"place_clearance", grasp.place_clearance},
        {"approach_offset", grasp.approach_offset},
        {"place_depth", grasp.place_depth}}},
      {"planner",
       {{"resolution", planner.resolution},
        {"inflation_radius", planner.inflation_radius},
        {"arc_length", planner.arc_length},
        {"max_curvature", planner.max_curvature},
        {"reverse_cost", planner.reverse_cost},
        {"rotation_step", planner.rotation_step},
        {"rotation_cost", planner.rotation_cost},
        {"heading_bins", planner.heading_bins},
        {"goal_position_tolerance", planner.goal_position_tolerance},
        {"goal_heading_tolerance", planner.goal_heading_tolerance},
        {"lookahead", planner.lookahead},
        {"max_expansions", planner.max_expansions}}},
      {"task",
       {{"max_iterations", task.max_iterations},
        {"skill_timeout", task.skill_timeout},
        {"llm_endpoint", task.llm_endpoint},
        {"llm_model", task.llm_model},
        {"llm_timeout", task.llm_timeout},
        {"llm_retries", task.llm_retries}}},
  };
}

}  // namespace eeroot
