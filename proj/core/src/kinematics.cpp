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

#include "eeroot/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Cholesky>

#include "eeroot/errors.hpp"

namespace eeroot {

namespace {

Pose3 translation(const Vec3& t) { return {t, Quat::Identity()}; }

Pose3 rotation(const Vec3& axis, double angle) {
  return {Vec3::Zero(), Quat(Eigen::AngleAxisd(angle, axis))};
}

struct ChainFrames {
  std::array<Vec3, kArmDofs> origins;
  std::array<Vec3, kArmDofs> axes;
  Pose3 tool;
};

ChainFrames chain_frames(const RobotModel& model, const RootPose& root, const JointVector& q,
                         Side side) {
  ChainFrames out;
  const auto& chain = model.chain(side);
  const int base = static_cast<int>(side) * kArmDofs;
  Pose3 frame = root.pose();
  for (int i = 0; i < kArmDofs; ++i) {
    frame = compose(frame, chain[i].parent_offset);
    out.origins[i] = frame.position;
    out.axes[i] = frame.orientation * chain[i].axis;
    frame = compose(frame, rotation(chain[i].axis, q[base + i]));
  }
  out.tool = compose(frame, model.tool_offset());
  return out;
}

bool finite_pose(const Pose3& p) {
  return p.position.allFinite() && p.orientation.coeffs().allFinite();
}

}  // namespace

RobotModel::RobotModel(const RobotGeometry& geometry) : geometry_(geometry) {
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  for (Side side : {Side::kLeft, Side::kRight}) {
    auto& chain = chains_[static_cast<int>(side)];
    chain[0] = {translation(shoulder_in_root(side)), ey};  // shoulder pitch
    chain[1] = {Pose3::identity(), ex};                     // shoulder roll
    chain[2] = {Pose3::identity(), ez};                     // shoulder yaw
    chain[3] = {translation({0.0, 0.0, -geometry.upper_arm}), ey};  // elbow pitch
    chain[4] = {translation({0.0, 0.0, -geometry.forearm}), ez};    // wrist roll
    chain[5] = {Pose3::identity(), ey};                             // wrist pitch
    chain[6] = {Pose3::identity(), ex};                             // wrist yaw
  }
  tool_ = translation({0.0, 0.0, -geometry.hand});
}

Vec3 RobotModel::shoulder_in_root(Side side) const {
  const double sign = side == Side::kLeft ? 1.0 : -1.0;
  return {0.0, sign * geometry_.shoulder_lateral, geometry_.shoulder_height};
}

Vec3 RobotModel::shoulder_in_world(const RootPose& root, Side side) const {
  return root.pose().transform_point(shoulder_in_root(side));
}

JointVector RobotModel::nominal_configuration() const {
  JointVector q = JointVector::Zero();
  for (int base : {0, kArmDofs}) {
    q[base + 0] = -0.4;  // shoulder pitch, arm forward
    q[base + 3] = -1.2;  // elbow flexed forward
    q[base + 5] = 1.2;   // wrist pitched back toward level
  }
  return q;
}

JointVector RobotModel::clamp(const JointVector& q) const {
  const double lim = geometry_.joint_limit;
  return q.cwiseMax(-lim).cwiseMin(lim);
}

bool RobotModel::within_limits(const JointVector& q, double tol) const {
  return q.cwiseAbs().maxCoeff() <= geometry_.joint_limit + tol;
}

Pose3 forward_kinematics(const RobotModel& model, const RootPose& root, const JointVector& q,
                         Side side) {
  return chain_frames(model, root, q, side).tool;
}

EePoses forward_kinematics(const RobotModel& model, const RootPose& root, const JointVector& q) {
  return {forward_kinematics(model, root, q, Side::kLeft),
          forward_kinematics(model, root, q, Side::kRight)};
}

ArmJacobian jacobian(const RobotModel& model, const RootPose& root, const JointVector& q,
                     Side side) {
  const ChainFrames frames = chain_frames(model, root, q, side);
  const Vec3 p_ee = frames.tool.position;
  ArmJacobian jac = ArmJacobian::Zero();
  jac.block<3, 3>(0, 0) = Mat3::Identity();
  const Vec3 ez = Vec3::UnitZ();
  jac.block<3, 1>(0, 3) = ez.cross(p_ee - root.position());
  jac.block<3, 1>(3, 3) = ez;
  for (int i = 0; i < kArmDofs; ++i) {
    jac.block<3, 1>(0, kRootDofs + i) = frames.axes[i].cross(p_ee - frames.origins[i]);
    jac.block<3, 1>(3, kRootDofs + i) = frames.axes[i];
  }
  return jac;
}

Vec3 orientation_error(const Quat& target, const Quat& current) {
  return to_rotation_vector(target * current.conjugate());
}

IkOptions IkOptions::from_config(const Config& cfg) {
  IkOptions o;
  o.damping = cfg.ik.damping;
  o.position_weight = cfg.ik.position_weight;
  o.orientation_weight = cfg.ik.orientation_weight;
  o.dt = cfg.timestep;
  o.root_limits = cfg.root;
  return o;
}

Eigen::Matrix<double, 12, 1> task_error(const RobotModel& model, const RootPose& root,
                                        const JointVector& q, const EePoses& targets) {
  const EePoses current = forward_kinematics(model, root, q);
  Eigen::Matrix<double, 12, 1> e;
  for (Side side : {Side::kLeft, Side::kRight}) {
    const int r = static_cast<int>(side) * 6;
    e.segment<3>(r) = targets[side].position - current[side].position;
    e.segment<3>(r + 3) = orientation_error(targets[side].orientation, current[side].orientation);
  }
  return e;
}

namespace {

// DLS solve with the columns of `locked` joints removed.
IkStep dls_solve(const RobotModel& model, const RootPose& root, const JointVector& q,
                 const EePoses& targets, const IkOptions& options,
                 const Eigen::Array<bool, kArmJoints, 1>& locked) {
  const int root_cols = options.root_assist ? kRootDofs : 0;
  const int n = root_cols + kArmJoints;
  Eigen::Matrix<double, 12, Eigen::Dynamic> jac = Eigen::MatrixXd::Zero(12, n);
  for (Side side : {Side::kLeft, Side::kRight}) {
    const int r = static_cast<int>(side) * 6;
    const ArmJacobian arm = jacobian(model, root, q, side);
    if (options.root_assist) jac.block<6, kRootDofs>(r, 0) = arm.leftCols<kRootDofs>();
    jac.block<6, kArmDofs>(r, root_cols + static_cast<int>(side) * kArmDofs) =
        arm.rightCols<kArmDofs>();
  }
  for (int i = 0; i < kArmJoints; ++i) {
    if (locked[i]) jac.col(root_cols + i).setZero();
  }
  Eigen::Matrix<double, 12, 1> weights;
  for (int r : {0, 6}) {
    weights.segment<3>(r).setConstant(options.position_weight);
    weights.segment<3>(r + 3).setConstant(options.orientation_weight);
  }
  const Eigen::Matrix<double, 12, 1> e = weights.cwiseProduct(task_error(model, root, q, targets));
  jac = weights.asDiagonal() * jac;

  Eigen::Matrix<double, 12, 12> jjt = jac * jac.transpose();
  jjt.diagonal().array() += options.damping * options.damping;
  const Eigen::VectorXd delta = jac.transpose() * jjt.ldlt().solve(e);

  IkStep step;
  if (options.root_assist) step.root = delta.head<kRootDofs>();
  step.joints = delta.tail<kArmJoints>();
  return step;
}

}  // namespace

IkStep dls_direction(const RobotModel& model, const RootPose& root, const JointVector& q,
                     const EePoses& targets, const IkOptions& options) {
  return dls_solve(model, root, q, targets, options,
                   Eigen::Array<bool, kArmJoints, 1>::Constant(false));
}

IkStep dls_ik_step(const RobotModel& model, const RootPose& root, const JointVector& q,
                   const EePoses& targets, const IkOptions& options) {
  if (!q.allFinite() || !finite_pose(targets.left) || !finite_pose(targets.right) ||
      !root.position().allFinite() || !std::isfinite(root.yaw)) {
    throw NonFiniteInput("dls_ik_step: non-finite joint vector, root or target");
  }
  if (!(options.damping > 0.0)) throw Error("dls_ik_step: damping must be positive");

  // Joints that would leave their range are locked and the step re-solved, so the
  // remaining joints absorb the task error instead of stalling at the limit.
  Eigen::Array<bool, kArmJoints, 1> locked = Eigen::Array<bool, kArmJoints, 1>::Constant(false);
  const double lim = model.joint_limit();
  IkStep step;
  for (int pass = 0; pass <= kArmJoints; ++pass) {
    step = dls_solve(model, root, q, targets, options, locked);
    bool changed = false;
    for (int i = 0; i < kArmJoints; ++i) {
      if (locked[i]) continue;
      const double next = q[i] + step.joints[i];
      if ((next > lim && q[i] >= lim - 1e-9) || (next < -lim && q[i] <= -lim + 1e-9)) {
        locked[i] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }

  if (options.clamp_velocity) {
    double scale = 1.0;
    const double joint_max = model.joint_velocity_limit() * options.dt;
    const double joint_peak = step.joints.cwiseAbs().maxCoeff();
    if (joint_peak > joint_max) scale = std::min(scale, joint_max / joint_peak);
    if (options.root_assist) {
      const RootLimits& rl = options.root_limits;
      const double planar = step.root.head<2>().norm();
      if (planar > rl.max_planar_speed * options.dt) {
        scale = std::min(scale, rl.max_planar_speed * options.dt / planar);
      }
      if (std::abs(step.root[2]) > rl.max_vertical_speed * options.dt) {
        scale = std::min(scale, rl.max_vertical_speed * options.dt / std::abs(step.root[2]));
      }
      if (std::abs(step.root[3]) > rl.max_yaw_rate * options.dt) {
        scale = std::min(scale, rl.max_yaw_rate * options.dt / std::abs(step.root[3]));
      }
    }
    step.joints *= scale;
    step.root *= scale;
  }

  step.joints = model.clamp(q + step.joints) - q;
  if (options.root_assist) {
    const double z = std::clamp(root.z + step.root[2], options.root_limits.z_min,
                                options.root_limits.z_max);
    step.root[2] = z - root.z;
  }
  return step;
}

RootPose apply(const RootPose& root, const RootDelta& delta) {
  return {root.x + delta[0], root.y + delta[1], root.z + delta[2], wrap_angle(root.yaw + delta[3])};
}

IkResult solve_ik(const RobotModel& model, const RootPose& root, const JointVector& q0,
                  const EePoses& targets, const IkOptions& options, int max_iterations,
                  double position_tol, double orientation_tol, const IkRestarts& restarts) {
  IkResult result{root, q0, 0, 0, 0.0, 0.0, false};
  Eigen::Matrix<double, 12, 1> e;
  auto measure = [&] {
    e = task_error(model, result.root, result.q, targets);
    result.position_error = std::max(e.segment<3>(0).norm(), e.segment<3>(6).norm());
    result.orientation_error = std::max(e.segment<3>(3).norm(), e.segment<3>(9).norm());
    result.converged =
        result.position_error <= position_tol && result.orientation_error <= orientation_tol;
  };
  auto arm_cost = [](const Eigen::Matrix<double, 12, 1>& err, int arm) {
    return err.segment<3>(6 * arm).norm() + 0.1 * err.segment<3>(6 * arm + 3).norm();
  };

  std::mt19937_64 rng(restarts.seed);
  std::uniform_real_distribution<double> sample(-model.joint_limit(), model.joint_limit());
  auto reseed = [&](int arm) {
    JointVector best = result.q;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int n = 0; n < restarts.samples; ++n) {
      JointVector candidate = result.q;
      for (int k = 0; k < kArmDofs; ++k) candidate[arm * kArmDofs + k] = sample(rng);
      const double c = arm_cost(task_error(model, result.root, candidate, targets), arm);
      if (c < best_cost) {
        best_cost = c;
        best = candidate;
      }
    }
    result.q = best;
    ++result.restarts;
  };

  std::array<std::vector<double>, 2> history;
  measure();
  while (!result.converged && result.iterations < max_iterations) {
    if (restarts.enabled) {
      for (int arm = 0; arm < 2; ++arm) {
        const bool done = e.segment<3>(6 * arm).norm() <= position_tol &&
                          e.segment<3>(6 * arm + 3).norm() <= orientation_tol;
        auto& h = history[arm];
        if (done) {
          h.clear();
          continue;
        }
        h.push_back(arm_cost(e, arm));
        const auto w = static_cast<std::size_t>(restarts.window);
        if (h.size() > w && h.back() > restarts.ratio * h[h.size() - 1 - w]) {
          reseed(arm);
          h.clear();
        }
      }
    }
    const IkStep step = dls_ik_step(model, result.root, result.q, targets, options);
    result.q += step.joints;
    if (options.root_assist) result.root = apply(result.root, step.root);
    ++result.iterations;
    measure();
  }
  return result;
}

}  // namespace eeroot
