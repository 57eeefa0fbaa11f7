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


#include "eeroot/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "eeroot/controller.hpp"
#include "eeroot/errors.hpp"
#include "eeroot/world.hpp"

namespace eeroot {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Welford accumulator; sum_sq kept separately for the RMS.
struct Moments {
  double sum_sq = 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;

  void add(double e) {
    sum_sq += e * e;
    ++n;
    const double d = e - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (e - mean);
  }
  double rms() const { return n == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(n)); }
  double stddev() const { return n == 0 ? 0.0 : std::sqrt(std::max(0.0, m2 / static_cast<double>(n))); }
};

double rotation_angle(const Quat& a, const Quat& b) { return a.angularDistance(b); }

Vec3 jerk_at(std::span<const Vec3> p, std::size_t t, double dt3) {
  return (p[t] - 3.0 * p[t - 1] + 3.0 * p[t - 2] - p[t - 3]) / dt3;
}

void check_jerk_input(std::size_t n, double dt) {
  if (n < 4) throw TooFewSamples("rms_jerk: need at least 4 samples, got " + std::to_string(n));
  if (!(dt > 0.0)) throw ConfigError("rms_jerk: dt must be positive");
}

}  // namespace

TrackingErrors tracking_error(std::span<const EePoses> reference, std::span<const EePoses> actual) {
  if (reference.size() != actual.size()) {
    throw LengthMismatch("tracking_error: " + std::to_string(reference.size()) + " reference vs " +
                         std::to_string(actual.size()) + " actual samples");
  }
  Moments pos, rot;
  for (std::size_t t = 0; t < reference.size(); ++t) {
    for (Side s : {Side::kLeft, Side::kRight}) {
      pos.add((actual[t][s].position - reference[t][s].position).norm());
      rot.add(rotation_angle(actual[t][s].orientation, reference[t][s].orientation));
    }
  }
  return {pos.rms(), pos.stddev(), rot.rms(), rot.stddev()};
}

double rms_jerk(std::span<const Vec3> p, double dt) {
  check_jerk_input(p.size(), dt);
  const double dt3 = dt * dt * dt;
  double sum = 0.0;
  for (std::size_t t = 3; t < p.size(); ++t) sum += jerk_at(p, t, dt3).squaredNorm();
  return std::sqrt(sum / static_cast<double>(p.size() - 3));
}

double rms_jerk(std::span<const EePoses> poses, double dt) {
  check_jerk_input(poses.size(), dt);
  std::vector<Vec3> left, right;
  left.reserve(poses.size());
  right.reserve(poses.size());
  for (const auto& p : poses) {
    left.push_back(p.left.position);
    right.push_back(p.right.position);
  }
  const double l = rms_jerk(left, dt);
  const double r = rms_jerk(right, dt);
  return std::sqrt(0.5 * (l * l + r * r));
}

// ---- tracking suite --------------------------------------------------------

json TrackingOptions::to_json() const {
  return {{"trajectories", trajectories}, {"seed", seed},     {"duration", duration},
          {"max_task_speed", max_task_speed}, {"forces", forces}, {"filter", filter},
          {"zero_motion", zero_motion}};
}

namespace {

struct Harmonic {
  double amplitude, omega, phase;
  double at(double t) const { return amplitude * (std::sin(omega * t + phase) - std::sin(phase)); }
};

struct Pulse {
  double start, end;
  Vec3 force;
};

class Reference {
 public:
  Reference(std::uint64_t seed, const RobotModel& model, const TrackingOptions& o, const Config& cfg)
      : model_(model), q0_(model.nominal_configuration()), root0_(start_pose(cfg)) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    const double margin = 0.2;
    for (int j = 0; j < kArmJoints; ++j) {
      const double room = model.joint_limit() - margin - std::abs(q0_[j]);
      double total = 0.0;
      for (auto& h : joints_[j]) {
        h = {uniform(0.0, 0.3), kTwoPi * uniform(0.1, 0.35), uniform(0.0, kTwoPi)};
        total += 2.0 * h.amplitude;  // |sin(wt+p) - sin(p)| <= 2
      }
      if (total > room) {
        for (auto& h : joints_[j]) h.amplitude *= room / total;
      }
    }
    const std::array<double, 4> root_amp = {0.15, 0.15, 0.05, 0.3};
    for (int k = 0; k < 4; ++k) {
      for (auto& h : root_[k]) h = {uniform(0.0, root_amp[k] / 2), kTwoPi * uniform(0.05, 0.2), uniform(0.0, kTwoPi)};
    }
    if (o.zero_motion) {
      for (auto& hs : joints_) {
        for (auto& h : hs) h.amplitude = 0.0;
      }
      for (auto& hs : root_) {
        for (auto& h : hs) h.amplitude = 0.0;
      }
    }
    // Slow the whole reference down until the EE speed bound holds.
    const double dt = cfg.timestep;
    double vmax = 0.0;
    EePoses prev = world(0.0);
    for (double t = dt; t <= o.duration + 1e-9; t += dt) {
      const EePoses cur = world(t);
      for (Side s : {Side::kLeft, Side::kRight}) {
        vmax = std::max(vmax, (cur[s].position - prev[s].position).norm() / dt);
      }
      prev = cur;
    }
    if (vmax > o.max_task_speed) time_scale_ = o.max_task_speed / vmax;
    max_speed_ = vmax * time_scale_;
    if (o.forces) {
      for (int side = 0; side < 2; ++side) {
        for (int k = 0; k < 4; ++k) {
          const double start = uniform(0.5, std::max(0.6, o.duration - 0.5));
          Vec3 dir(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
          if (dir.norm() < 1e-6) dir = Vec3::UnitX();
          pulses_[side].push_back({start, start + uniform(0.1, 0.4), dir.normalized() * uniform(5.0, 15.0)});
        }
      }
    }
  }

  JointVector joints(double t) const {
    JointVector q = q0_;
    for (int j = 0; j < kArmJoints; ++j) {
      for (const auto& h : joints_[j]) q[j] += h.at(t * time_scale_);
    }
    return q;
  }
  RootPose root(double t) const {
    std::array<double, 4> d{};
    for (int k = 0; k < 4; ++k) {
      for (const auto& h : root_[k]) d[k] += h.at(t * time_scale_);
    }
    return {root0_.x + d[0], root0_.y + d[1], root0_.z + d[2], wrap_angle(root0_.yaw + d[3])};
  }
  EeRootCommand command(double t) const {
    const RootPose r = root(t);
    const EePoses w = forward_kinematics(model_, r, joints(t));
    return {r, EeTarget::from_pose(world_to_ee(r, w.left)), EeTarget::from_pose(world_to_ee(r, w.right))};
  }
  EePoses world(double t) const { return forward_kinematics(model_, root(t), joints(t)); }
  ContactForces forces(double t) const {
    ContactForces f;
    for (int side = 0; side < 2; ++side) {
      for (const auto& p : pulses_[side]) {
        if (t >= p.start && t < p.end) {
          f[side].force += p.force;
          f[side].source = "pulse";
        }
      }
    }
    return f;
  }
  double max_speed() const { return max_speed_; }

 private:
  const RobotModel& model_;
  JointVector q0_;
  RootPose root0_;
  std::array<std::array<Harmonic, 3>, kArmJoints> joints_{};
  std::array<std::array<Harmonic, 2>, 4> root_{};
  std::array<std::vector<Pulse>, 2> pulses_;
  double time_scale_ = 1.0;
  double max_speed_ = 0.0;
};

}  // namespace

TrajectoryResult run_tracking_trajectory(std::uint64_t seed, const TrackingOptions& o, const Config& base) {
  Config cfg = base;
  cfg.compliance.filter_enabled = o.filter;
  const Controller controller(cfg);
  const RobotModel& model = controller.model();
  const Reference ref(seed, model, o, cfg);

  ControllerState state = controller.initial_state(ref.root(0.0), ref.joints(0.0));
  state.command = ref.command(0.0);
  const int ticks = static_cast<int>(std::lround(o.duration / cfg.timestep));

  TrajectoryResult result;
  result.seed = seed;
  result.max_reference_speed = ref.max_speed();
  std::vector<EePoses> reference, actual;
  reference.reserve(ticks);
  actual.reserve(ticks);
  Moments root_error;
  for (int k = 1; k <= ticks; ++k) {
    const double t = k * cfg.timestep;
    const EeRootCommand cmd = ref.command(t);
    state = controller.step(state, cmd, ref.forces(t));
    const EePoses want{ee_to_world(state.root, cmd.ee_left.pose()), ee_to_world(state.root, cmd.ee_right.pose())};
    const EePoses got = controller.ee_poses(state);
    reference.push_back(want);
    actual.push_back(got);
    root_error.add((state.root.position() - cmd.root.position()).norm());
    if (!model.within_limits(state.q, 1e-9)) result.joint_limits_respected = false;
    if (o.record) result.samples.push_back({want, got, cmd.root, state.root});
  }
  result.errors = tracking_error(reference, actual);
  result.rms_jerk = rms_jerk(actual, cfg.timestep);
  result.root_position_rmse = root_error.rms();
  return result;
}

TrackingReport run_tracking_suite(const TrackingOptions& o, const Config& cfg) {
  if (o.trajectories < 1) throw ConfigError("tracking suite needs at least one trajectory");
  TrackingReport report;
  report.options = o;
  Moments jerk;
  for (int i = 0; i < o.trajectories; ++i) {
    TrajectoryResult r = run_tracking_trajectory(o.seed + static_cast<std::uint64_t>(i), o, cfg);
    jerk.add(r.rms_jerk);
    report.joint_limits_respected = report.joint_limits_respected && r.joint_limits_respected;
    report.per_trajectory.push_back(std::move(r));
  }
  const double n = static_cast<double>(o.trajectories);
  // Equal tick counts: pool per-tick moments from each trajectory's mean and RMS.
  double mean_pos = 0.0, mean_rot = 0.0, sq_pos = 0.0, sq_rot = 0.0;
  for (const auto& r : report.per_trajectory) {
    const auto& e = r.errors;
    const double m_pos = std::sqrt(std::max(0.0, e.position_rmse * e.position_rmse - e.position_std * e.position_std));
    const double m_rot = std::sqrt(std::max(0.0, e.rotation_rmse * e.rotation_rmse - e.rotation_std * e.rotation_std));
    mean_pos += m_pos / n;
    mean_rot += m_rot / n;
    sq_pos += e.position_rmse * e.position_rmse / n;
    sq_rot += e.rotation_rmse * e.rotation_rmse / n;
  }
  report.errors.position_rmse = std::sqrt(sq_pos);
  report.errors.position_std = std::sqrt(std::max(0.0, sq_pos - mean_pos * mean_pos));
  report.errors.rotation_rmse = std::sqrt(sq_rot);
  report.errors.rotation_std = std::sqrt(std::max(0.0, sq_rot - mean_rot * mean_rot));
  report.rms_jerk = jerk.rms();
  report.rms_jerk_std = jerk.stddev();
  return report;
}

json TrackingReport::to_json() const {
  json per = json::array();
  for (const auto& r : per_trajectory) {
    json j{{"seed", r.seed},
           {"position_rmse", r.errors.position_rmse},
           {"position_std", r.errors.position_std},
           {"rotation_rmse", r.errors.rotation_rmse},
           {"rotation_std", r.errors.rotation_std},
           {"rms_jerk", r.rms_jerk},
           {"root_position_rmse", r.root_position_rmse},
           {"max_reference_speed", r.max_reference_speed},
           {"joint_limits_respected", r.joint_limits_respected}};
    if (!r.samples.empty()) {
      json samples = json::array();
      for (const auto& s : r.samples) {
        auto pose = [](const Pose3& p) {
          return json{p.position.x(), p.position.y(), p.position.z(), p.orientation.w(),
                      p.orientation.x(), p.orientation.y(), p.orientation.z()};
        };
        samples.push_back({{"reference", {pose(s.reference.left), pose(s.reference.right)}},
                           {"actual", {pose(s.actual.left), pose(s.actual.right)}},
                           {"root_reference", {s.root_reference.x, s.root_reference.y, s.root_reference.z,
                                               s.root_reference.yaw}},
                           {"root", {s.root.x, s.root.y, s.root.z, s.root.yaw}}});
      }
      j["samples"] = samples;
    }
    per.push_back(j);
  }
  return {{"options", options.to_json()},
          {"position_rmse", errors.position_rmse},
          {"position_std", errors.position_std},
          {"rotation_rmse", errors.rotation_rmse},
          {"rotation_std", errors.rotation_std},
          {"rms_jerk", rms_jerk},
          {"rms_jerk_std", rms_jerk_std},
          {"joint_limits_respected", joint_limits_respected},
          {"per_trajectory", per}};
}

std::string TrackingReport::table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-28s %-18s %-18s %-20s\n%-28s %.4f (%.4f)    %.4f (%.4f)    %.4g (%.3g)\n",
                "Variant", "e_p [m]", "e_r [rad]", "RMS jerk [m/s^3]",
                (std::string(options.forces ? "force pulses" : "no forces") +
                 (options.filter ? ", low-pass" : ", no low-pass"))
                    .c_str(),
                errors.position_rmse, errors.position_std, errors.rotation_rmse, errors.rotation_std, rms_jerk,
                rms_jerk_std);
  return std::string(buf) + std::to_string(per_trajectory.size()) + " trajectories, seed " +
         std::to_string(options.seed) + "\n";
}

// ---- system suite ----------------------------------------------------------

std::string to_string(TaskCategory c) {
  switch (c) {
    case TaskCategory::kSimpleArm: return "simple-arm";
    case TaskCategory::kSimpleNav: return "simple-nav";
    case TaskCategory::kExplicitPlacement: return "explicit-placement";
    case TaskCategory::kLinguisticVariation: return "linguistic-variation";
    case TaskCategory::kSpatialRelation: return "spatial-relation";
    case TaskCategory::kLongHorizon2Obj: return "long-horizon-2obj";
  }
  return "explicit-placement";
}

std::vector<TaskCategory> all_task_categories() {
  return {TaskCategory::kSimpleArm,           TaskCategory::kSimpleNav,       TaskCategory::kExplicitPlacement,
          TaskCategory::kLinguisticVariation, TaskCategory::kSpatialRelation, TaskCategory::kLongHorizon2Obj};
}

TaskCategory parse_task_category(std::string_view name) {
  for (TaskCategory c : all_task_categories()) {
    if (to_string(c) == name) return c;
  }
  throw ParamValidation("unknown task category '" + std::string(name) + "'");
}

const std::vector<std::string>& explicit_templates(TaskCategory c) {
  static const std::map<TaskCategory, std::vector<std::string>> templates = {
      {TaskCategory::kSimpleArm, {"Set your hands to {state}."}},
      {TaskCategory::kSimpleNav, {"Go to the {dst}."}},
      {TaskCategory::kExplicitPlacement, {"Move {box} from the {src} to the {dst}."}},
      {TaskCategory::kLinguisticVariation, {"Move {box} from the {src} to the {dst}."}},
      {TaskCategory::kSpatialRelation, {"Place the box from the {src} to the {side} of the {dst}."}},
      {TaskCategory::kLongHorizon2Obj,
       {"Move {box} from the {src} to the {dst}, then move {box2} from the {src2} to the {dst2}."}},
  };
  return templates.at(c);
}

const std::vector<std::string>& paraphrases(TaskCategory c) {
  static const std::map<TaskCategory, std::vector<std::string>> lists = {
      {TaskCategory::kSimpleArm,
       {"Could you put your arms {arm}?", "Please get your hands {arm}.", "I'd like your hands {arm}.",
        "Bring both arms {arm}."}},
      {TaskCategory::kSimpleNav,
       {"Walk over to the {dst}.", "Could you head to the {dst}?", "Please move in front of the {dst}.",
        "Navigate to the {dst}, please."}},
      {TaskCategory::kExplicitPlacement,
       {"Put {box} from the {src} onto the {dst}.", "Carry {box} off the {src} to the {dst}.",
        "Relocate {box} from the {src} to the {dst}."}},
      {TaskCategory::kLinguisticVariation,
       {"Pick up the box on the {src} and put it on the {dst}.",
        "Could you bring the box from the {src} over to the {dst}?",
        "Take the box off the {src} and set it down on the {dst}.",
        "I need the box that is on the {src} moved onto the {dst}."}},
      {TaskCategory::kSpatialRelation,
       {"Put the box from the {src} on the {side} side of the {dst}.",
        "Take the box off the {src} and place it to the {side} of the {dst}.",
        "Could you move the box from the {src} so it sits on the {side} of the {dst}?"}},
      {TaskCategory::kLongHorizon2Obj,
       {"First bring {box} from the {src} to the {dst}, then bring {box2} from the {src2} to the {dst2}.",
        "Take {box} off the {src} and put it on the {dst}; after that move {box2} off the {src2} onto the {dst2}.",
        "Carry {box} from the {src} to the {dst} and then carry {box2} from the {src2} to the {dst2}."}},
  };
  return lists.at(c);
}

namespace {

std::string fill(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string token = "{" + key + "}";
    for (std::size_t at = text.find(token); at != std::string::npos; at = text.find(token, at + value.size())) {
      text.replace(at, token.size(), value);
    }
  }
  return text;
}

std::string synonym(const std::string& id, int variant) {
  static const std::map<std::string, std::vector<std::string>> words = {
      {"table", {"table", "desk"}}, {"sofa", {"sofa", "couch"}}, {"bed", {"bed"}}};
  const auto& list = words.at(id);
  return list[static_cast<std::size_t>(variant) % list.size()];
}

const Furniture& furniture(const Scene& s, const std::string& id) {
  for (const auto& f : s.furniture) {
    if (f.id == id) return f;
  }
  throw UnknownObject("no furniture '" + id + "'");
}

struct Move {
  std::string box, src, dst;
};

// Single-object moves that never stack two boxes on one spot.
const std::array<Move, 4> kMoves = {{{"box1", "table", "bed"},
                                     {"box2", "sofa", "table"},
                                     {"box1", "table", "sofa"},
                                     {"box2", "sofa", "bed"}}};

}  // namespace

TrialSpec make_trial(TaskCategory category, std::uint64_t seed, int index, bool paraphrased, const Config& cfg) {
  const Scene scene = sample_scene({.seed = seed});
  TrialSpec t;
  t.seed = seed;
  const auto& list = paraphrased || category == TaskCategory::kLinguisticVariation ? paraphrases(category)
                                                                                   : explicit_templates(category);
  const std::string& tmpl = list[static_cast<std::size_t>(index) % list.size()];
  const int variant = paraphrased || category == TaskCategory::kLinguisticVariation ? index / 2 : 0;
  switch (category) {
    case TaskCategory::kSimpleArm: {
      static const std::array<HandStateKind, 3> states = {HandStateKind::kReady, HandStateKind::kHold,
                                                          HandStateKind::kRest};
      static const std::map<HandStateKind, std::string> arm = {{HandStateKind::kReady, "up, ready to grab something"},
                                                               {HandStateKind::kHold, "in front of your chest"},
                                                               {HandStateKind::kRest, "down by your sides"}};
      const HandStateKind s = states[static_cast<std::size_t>(index) % states.size()];
      t.instruction = fill(tmpl, {{"state", HandState{s, 0.0, std::nullopt}.name()}, {"arm", arm.at(s)}});
      t.goal = TaskGoal::hands(s);
      if (s == HandStateKind::kRest) t.setup.push_back({"set_hands", {{"state", "READY"}}});
      break;
    }
    case TaskCategory::kSimpleNav: {
      static const std::array<const char*, 3> targets = {"table", "sofa", "bed"};
      const std::string dst = targets[static_cast<std::size_t>(index) % targets.size()];
      t.instruction = fill(tmpl, {{"dst", synonym(dst, variant)}});
      t.goal = TaskGoal::root_at(approach_pose(furniture(scene, dst), 0.5, 0.0, cfg.root.z_nominal));
      break;
    }
    case TaskCategory::kExplicitPlacement:
    case TaskCategory::kLinguisticVariation: {
      const Move& m = kMoves[static_cast<std::size_t>(index) % kMoves.size()];
      t.instruction = fill(tmpl, {{"box", m.box}, {"src", synonym(m.src, variant)}, {"dst", synonym(m.dst, variant + 1)}});
      t.goal = TaskGoal::box_on(m.box, m.dst);
      break;
    }
    case TaskCategory::kSpatialRelation: {
      const Move& m = kMoves[static_cast<std::size_t>(index / 2) % kMoves.size()];
      const bool left = index % 2 == 0;
      t.instruction = fill(tmpl, {{"src", synonym(m.src, variant)},
                                  {"dst", synonym(m.dst, variant + 1)},
                                  {"side", left ? "left" : "right"}});
      t.goal = TaskGoal::box_beside(m.box, furniture(scene, m.dst), left ? 0.6 : -0.6);
      break;
    }
    case TaskCategory::kLongHorizon2Obj: {
      const bool first = index % 2 == 0;
      const Move a = first ? Move{"box1", "table", "bed"} : Move{"box2", "sofa", "bed"};
      const Move b = first ? Move{"box2", "sofa", "table"} : Move{"box1", "table", "sofa"};
      t.instruction = fill(tmpl, {{"box", a.box}, {"src", a.src}, {"dst", a.dst},
                                  {"box2", b.box}, {"src2", b.src}, {"dst2", b.dst}});
      t.goal = TaskGoal::box_on(a.box, a.dst);
      t.goal.clauses.push_back(TaskGoal::box_on(b.box, b.dst).clauses.front());
      break;
    }
  }
  return t;
}

json TrialResult::to_json() const {
  json j{{"seed", seed},         {"instruction", instruction}, {"success", success},
         {"steps", steps},       {"sim_time", sim_time},       {"stop", eeroot::to_string(stop)},
         {"failure", eeroot::to_string(failure)}};
  if (!transcript.is_null()) j["transcript"] = transcript;
  return j;
}

namespace {

TrialResult run_trial(const SystemOptions& o, int index, const Config& cfg) {
  const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(index);
  const TrialSpec spec = make_trial(o.category, seed, index, o.paraphrased, cfg);
  Simulation sim(cfg, sample_scene({.seed = seed}));
  SkillContext ctx(sim);
  const SkillRegistry registry = SkillRegistry::builtin();
  for (const auto& call : spec.setup) registry.invoke(call.name, call.params, ctx);

  std::unique_ptr<PlannerBackend> backend;
  if (o.backend == "scripted") {
    backend = std::make_unique<ScriptedBackend>(cfg);
  } else if (o.backend == "llm") {
    backend = std::make_unique<LlmBackend>(o.llm, registry.tool_schemas());
  } else {
    throw ParamValidation("unknown backend '" + o.backend + "'");
  }
  TaskOptions topts;
  topts.max_iterations = cfg.task.max_iterations;
  const TaskResult r = run_task(spec.instruction, *backend, ctx, registry, spec.goal, topts);

  TrialResult out;
  out.seed = seed;
  out.instruction = spec.instruction;
  out.success = r.success;
  out.steps = r.steps;
  out.sim_time = r.elapsed_sim_time;
  out.stop = r.stop;
  out.failure = classify_failure(r, sim.scene(), spec.goal);
  if (o.keep_transcripts) out.transcript = r.transcript;
  return out;
}

}  // namespace

SystemReport run_system_suite(const SystemOptions& o, const Config& cfg) {
  if (o.trials < 1) throw ConfigError("system suite needs at least one trial");
  if (o.backend != "scripted" && o.backend != "llm") throw ParamValidation("unknown backend '" + o.backend + "'");
  std::vector<TrialResult> results(static_cast<std::size_t>(o.trials));
  std::atomic<int> next{0};
  std::mutex report_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < o.trials; i = next++) {
      try {
        results[static_cast<std::size_t>(i)] = run_trial(o, i, cfg);
        if (o.on_trial) {
          std::lock_guard lock(report_mutex);
          o.on_trial(i, results[static_cast<std::size_t>(i)].to_json());
        }
      } catch (...) {
        std::lock_guard lock(report_mutex);
        if (!failure) failure = std::current_exception();
        next = o.trials;
      }
    }
  };
  const int workers = std::clamp(o.workers, 1, o.trials);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  SystemReport report;
  report.category = o.category;
  report.backend = o.backend;
  report.paraphrased = o.paraphrased;
  report.trials = o.trials;
  double steps = 0.0, time = 0.0;
  for (auto& r : results) {
    if (r.success) {
      ++report.successes;
      steps += r.steps;
      time += r.sim_time;
    } else {
      ++report.failures[r.failure];
    }
  }
  if (report.successes > 0) {
    report.mean_steps = steps / report.successes;
    report.mean_sim_time = time / report.successes;
  }
  report.per_trial = std::move(results);
  return report;
}

json SystemReport::to_json() const {
  json hist = json::object();
  for (FailureCategory c : {FailureCategory::kLlmError, FailureCategory::kManipulation, FailureCategory::kLocomotion}) {
    const auto it = failures.find(c);
    hist[eeroot::to_string(c)] = it == failures.end() ? 0 : it->second;
  }
  json per = json::array();
  for (const auto& t : per_trial) per.push_back(t.to_json());
  return {{"category", eeroot::to_string(category)},
          {"backend", backend},
          {"paraphrased", paraphrased},
          {"trials", trials},
          {"successes", successes},
          {"success_rate", success_rate()},
          {"mean_steps", mean_steps},
          {"mean_sim_time", mean_sim_time},
          {"failures", hist},
          {"per_trial", per}};
}

std::string SystemReport::table() const { return system_table(std::span<const SystemReport>(this, 1)); }

std::string system_table(std::span<const SystemReport> reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-26s %-10s %9s %8s %10s   %s\n", "Task", "Backend", "Success", "Steps",
                "Time [s]", "Failures (llm/manip/loco)");
  out << line;
  for (const auto& r : reports) {
    auto count = [&](FailureCategory c) {
      const auto it = r.failures.find(c);
      return it == r.failures.end() ? 0 : it->second;
    };
    const std::string name = eeroot::to_string(r.category) + (r.paraphrased ? " (para)" : "");
    const std::string rate = std::to_string(r.successes) + "/" + std::to_string(r.trials);
    std::snprintf(line, sizeof line, "%-26s %-10s %9s %8.1f %10.1f   %d/%d/%d\n", name.c_str(), r.backend.c_str(),
                  rate.c_str(), r.mean_steps, r.mean_sim_time, count(FailureCategory::kLlmError),
                  count(FailureCategory::kManipulation), count(FailureCategory::kLocomotion));
    out << line;
  }
  return out.str();
}

}  // namespace eeroot
