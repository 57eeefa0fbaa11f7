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

#include "eeroot/locomotion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "eeroot/errors.hpp"
#include "eeroot/world.hpp"

namespace eeroot {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

// Pose after travelling signed arc length s at curvature kappa.
Pose2 integrate(const Pose2& p, double kappa, double s) {
  if (kappa == 0.0) {
    return {p.x + s * std::cos(p.theta), p.y + s * std::sin(p.theta), p.theta};
  }
  const double th = p.theta + kappa * s;
  return {p.x + (std::sin(th) - std::sin(p.theta)) / kappa,
          p.y - (std::cos(th) - std::cos(p.theta)) / kappa, wrap_angle(th)};
}

}  // namespace

std::string to_string(Motion m) {
  switch (m) {
    case Motion::kForward: return "forward";
    case Motion::kReverse: return "reverse";
    case Motion::kTurnInPlace: return "turn";
  }
  return "unknown";
}

GridMap::GridMap(double resolution, Eigen::Vector2d origin, int width, int height)
    : resolution_(resolution), origin_(std::move(origin)), width_(width), height_(height),
      raw_(static_cast<std::size_t>(width) * height, 0),
      inflated_(static_cast<std::size_t>(width) * height, 0) {
  if (!(resolution > 0.0) || width <= 0 || height <= 0) throw ConfigError("invalid grid dimensions");
}

GridMap GridMap::from_scene(const Scene& scene, const PlannerParams& params) {
  const double half = scene.room_size / 2.0;
  const int n = static_cast<int>(std::lround(scene.room_size / params.resolution));
  GridMap map(params.resolution, {-half, -half}, n, n);
  std::vector<Obb> obstacles;
  for (const auto& f : scene.furniture) obstacles.push_back(f.body);
  for (const auto& b : scene.boxes) {
    if (b.status != ObjectStatus::kCarried && b.support == Scene::kFloor) obstacles.push_back(b.body);
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector2d c = map.cell_center(i, j);
      for (const auto& o : obstacles) {
        if (o.footprint_contains(c.x(), c.y())) {
          map.set_occupied(i, j);
          break;
        }
      }
    }
  }
  map.inflate(params.inflation_radius);
  return map;
}

GridMap GridMap::from_ascii(std::string_view text, double resolution, Eigen::Vector2d origin) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("empty ascii map");
  const int w = static_cast<int>(rows.front().size());
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != w) throw ConfigError("ascii map rows differ in length");
  }
  const int h = static_cast<int>(rows.size());
  GridMap map(resolution, origin, w, h);
  for (int r = 0; r < h; ++r) {
    for (int i = 0; i < w; ++i) {
      const char c = rows[r][i];
      if (c != '.' && c != '#') throw ConfigError(std::string("bad ascii map character '") + c + "'");
      map.set_occupied(i, h - 1 - r, c == '#');
    }
  }
  return map;
}

GridMap GridMap::from_json(const json& j, const PlannerParams& params) {
  if (j.contains("rows")) {
    std::string text;
    for (const auto& r : j.at("rows")) text += r.get<std::string>() + "\n";
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    if (j.contains("origin")) origin = {j["origin"].at(0).get<double>(), j["origin"].at(1).get<double>()};
    GridMap map = from_ascii(text, j.value("resolution", params.resolution), origin);
    map.inflate(j.value("inflation_radius", params.inflation_radius));
    return map;
  }
  if (j.contains("scene")) return from_scene(Scene::from_json(j.at("scene")), params);
  return from_scene(sample_scene(ScenarioSpec::from_json(j)), params);
}

std::optional<std::pair<int, int>> GridMap::cell(double x, double y) const {
  const double fx = std::floor((x - origin_.x()) / resolution_);
  const double fy = std::floor((y - origin_.y()) / resolution_);
  if (!(fx >= 0 && fy >= 0 && fx < width_ && fy < height_)) return std::nullopt;
  return std::pair<int, int>{static_cast<int>(fx), static_cast<int>(fy)};
}

Eigen::Vector2d GridMap::cell_center(int i, int j) const {
  return origin_ + resolution_ * Eigen::Vector2d(i + 0.5, j + 0.5);
}

bool GridMap::raw_occupied(int i, int j) const {
  return !in_bounds(i, j) || raw_[static_cast<std::size_t>(j) * width_ + i] != 0;
}

void GridMap::set_occupied(int i, int j, bool value) {
  if (!in_bounds(i, j)) return;
  raw_[static_cast<std::size_t>(j) * width_ + i] = value ? 1 : 0;
  inflated_ = raw_;
  inflation_ = 0.0;
}

void GridMap::inflate(double radius) {
  inflation_ = radius;
  inflated_.assign(raw_.size(), 0);
  const int r = static_cast<int>(std::ceil(radius / resolution_));
  const double r2 = radius * radius + 1e-12;
  std::vector<std::pair<int, int>> kernel;
  for (int dj = -r; dj <= r; ++dj) {
    for (int di = -r; di <= r; ++di) {
      if ((di * di + dj * dj) * resolution_ * resolution_ <= r2) kernel.emplace_back(di, dj);
    }
  }
  for (int j = 0; j < height_; ++j) {
    for (int i = 0; i < width_; ++i) {
      if (!raw_[static_cast<std::size_t>(j) * width_ + i]) continue;
      for (const auto& [di, dj] : kernel) {
        if (in_bounds(i + di, j + dj)) inflated_[static_cast<std::size_t>(j + dj) * width_ + i + di] = 1;
      }
    }
  }
  // The region outside the grid is an obstacle too.
  for (int j = 0; j < height_; ++j) {
    for (int i = 0; i < width_; ++i) {
      const double edge = resolution_ * (std::min({i, j, width_ - 1 - i, height_ - 1 - j}) + 1);
      if (edge * edge <= r2) inflated_[static_cast<std::size_t>(j) * width_ + i] = 1;
    }
  }
}

bool GridMap::blocked_cell(int i, int j) const {
  return !in_bounds(i, j) || inflated_[static_cast<std::size_t>(j) * width_ + i] != 0;
}

bool GridMap::blocked(double x, double y) const {
  const auto c = cell(x, y);
  return !c || blocked_cell(c->first, c->second);
}

std::string GridMap::to_ascii(bool inflated) const {
  std::string out;
  for (int j = height_ - 1; j >= 0; --j) {
    for (int i = 0; i < width_; ++i) out += (inflated ? blocked_cell(i, j) : raw_occupied(i, j)) ? '#' : '.';
    out += '\n';
  }
  return out;
}

double PlannedPath::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (waypoints[i].direction == Motion::kTurnInPlace) continue;
    const Waypoint& a = waypoints[i - 1];
    const Waypoint& b = waypoints[i];
    if (b.curvature == 0.0) {
      total += std::hypot(b.x - a.x, b.y - a.y);
    } else {
      total += std::abs(wrap_angle(b.theta - a.theta) / b.curvature);
    }
  }
  return total;
}

std::vector<Waypoint> PlannedPath::sample(double step) const {
  std::vector<Waypoint> out;
  if (waypoints.empty()) return out;
  out.push_back(waypoints.front());
  if (waypoints.size() > 1) out.front().direction = waypoints[1].direction;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Waypoint& a = waypoints[i - 1];
    const Waypoint& b = waypoints[i];
    const Pose2 start{a.x, a.y, a.theta};
    if (b.direction == Motion::kTurnInPlace) {
      const double dth = wrap_angle(b.theta - a.theta);
      const int n = std::max(1, static_cast<int>(std::ceil(std::abs(dth) / step)));
      for (int k = 1; k <= n; ++k) {
        out.push_back({a.x, a.y, wrap_angle(a.theta + dth * k / n), b.direction, 0.0});
      }
      continue;
    }
    double s;
    if (b.curvature == 0.0) {
      s = std::hypot(b.x - a.x, b.y - a.y);
    } else {
      s = std::abs(wrap_angle(b.theta - a.theta) / b.curvature);
    }
    if (b.direction == Motion::kReverse) s = -s;
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(s) / step)));
    for (int k = 1; k <= n; ++k) {
      const Pose2 p = k == n ? Pose2{b.x, b.y, b.theta} : integrate(start, b.curvature, s * k / n);
      out.push_back({p.x, p.y, p.theta, b.direction, b.curvature});
    }
  }
  return out;
}

json PlannedPath::to_json() const {
  json j;
  j["cost"] = cost;
  j["length"] = length();
  j["waypoints"] = json::array();
  for (const auto& w : waypoints) {
    j["waypoints"].push_back({{"x", w.x}, {"y", w.y}, {"theta", w.theta},
                              {"direction", to_string(w.direction)}, {"curvature", w.curvature}});
  }
  return j;
}

bool path_collision_free(const GridMap& map, const PlannedPath& path, double step) {
  for (const auto& p : path.sample(step)) {
    if (map.blocked(p.x, p.y)) return false;
  }
  return true;
}

bool grid_reachable(const GridMap& map, const Pose2& start, const Pose2& goal) {
  const auto s = map.cell(start.x, start.y);
  const auto g = map.cell(goal.x, goal.y);
  if (!s || !g || map.blocked_cell(s->first, s->second) || map.blocked_cell(g->first, g->second)) {
    return false;
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(map.width()) * map.height(), 0);
  std::deque<std::pair<int, int>> queue{*s};
  seen[static_cast<std::size_t>(s->second) * map.width() + s->first] = 1;
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    if (i == g->first && j == g->second) return true;
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const int ni = i + di, nj = j + dj;
        if ((di == 0 && dj == 0) || map.blocked_cell(ni, nj)) continue;
        auto& flag = seen[static_cast<std::size_t>(nj) * map.width() + ni];
        if (!flag) {
          flag = 1;
          queue.emplace_back(ni, nj);
        }
      }
    }
  }
  return false;
}

namespace {

struct Primitive {
  Motion motion;
  double curvature;
  double length;  // signed arc length, or heading change for rotation
  double cost;
};

struct SearchNode {
  Pose2 pose;
  double g;
  int parent;
  Motion motion;
  double curvature;
};

}  // namespace

PlannedPath plan(const GridMap& map, const Pose2& start, const Pose2& goal,
                 const PlannerParams& params) {
  if (map.blocked(start.x, start.y)) throw StartBlocked("plan: start pose is in collision");
  if (map.blocked(goal.x, goal.y)) throw NoPath("plan: goal pose is in collision");

  auto at_goal = [&](const Pose2& p) {
    return std::hypot(p.x - goal.x, p.y - goal.y) <= params.goal_position_tolerance &&
           std::abs(wrap_angle(p.theta - goal.theta)) <= params.goal_heading_tolerance;
  };
  const double turn_rate = std::min(1.0 / params.max_curvature, params.rotation_cost / params.rotation_step);
  auto heuristic = [&](const Pose2& p) {
    return std::max(std::hypot(p.x - goal.x, p.y - goal.y),
                    std::abs(wrap_angle(goal.theta - p.theta)) * turn_rate);
  };

  std::vector<Primitive> primitives;
  const double kappas[] = {0.0, params.max_curvature / 2.0, -params.max_curvature / 2.0,
                           params.max_curvature, -params.max_curvature};
  for (double k : kappas) primitives.push_back({Motion::kForward, k, params.arc_length, params.arc_length});
  for (double k : kappas) {
    primitives.push_back({Motion::kReverse, k, -params.arc_length, params.arc_length * params.reverse_cost});
  }
  primitives.push_back({Motion::kTurnInPlace, 0.0, params.rotation_step, params.rotation_cost});
  primitives.push_back({Motion::kTurnInPlace, 0.0, -params.rotation_step, params.rotation_cost});

  const int bins = params.heading_bins;
  auto key = [&](const Pose2& p) -> std::int64_t {
    const auto c = map.cell(p.x, p.y);
    int b = static_cast<int>(std::floor((wrap_angle(p.theta) + kPi) / (2 * kPi) * bins));
    b = ((b % bins) + bins) % bins;
    return (static_cast<std::int64_t>(c->second) * map.width() + c->first) * bins + b;
  };

  std::vector<SearchNode> nodes;
  nodes.push_back({start, 0.0, -1, Motion::kForward, 0.0});
  using Entry = std::tuple<double, std::uint64_t, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t counter = 0;
  open.emplace(heuristic(start), counter++, 0);
  const std::size_t states = static_cast<std::size_t>(map.width()) * map.height() * bins;
  std::vector<double> best_g(states, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> closed(states, 0);
  best_g[key(start)] = 0.0;

  const double sample_step = 0.01;
  int expansions = 0;
  while (!open.empty()) {
    const auto [f, order, index] = open.top();
    open.pop();
    const SearchNode node = nodes[index];
    const std::int64_t k = key(node.pose);
    if (closed[k]) continue;
    closed[k] = 1;

    if (at_goal(node.pose)) {
      PlannedPath path;
      path.cost = node.g;
      path.expansions = expansions;
      for (int i = index; i >= 0; i = nodes[i].parent) {
        const SearchNode& n = nodes[i];
        path.waypoints.push_back({n.pose.x, n.pose.y, n.pose.theta, n.motion, n.curvature});
      }
      std::reverse(path.waypoints.begin(), path.waypoints.end());
      return path;
    }
    if (++expansions > params.max_expansions) break;

    for (const Primitive& prim : primitives) {
      Pose2 next;
      bool free = true;
      if (prim.motion == Motion::kTurnInPlace) {
        next = {node.pose.x, node.pose.y, wrap_angle(node.pose.theta + prim.length)};
      } else {
        // Incremental chord walk: each step rotates the heading by a fixed angle.
        const int n = static_cast<int>(std::ceil(std::abs(prim.length) / sample_step));
        const double ds = prim.length / n;
        const double dth = prim.curvature * ds;
        const double chord = prim.curvature == 0.0 ? ds : 2.0 * std::sin(dth / 2.0) / prim.curvature;
        const double cr = std::cos(dth), sr = std::sin(dth);
        double hx = std::cos(node.pose.theta + dth / 2.0), hy = std::sin(node.pose.theta + dth / 2.0);
        double x = node.pose.x, y = node.pose.y;
        for (int s = 1; s <= n && free; ++s) {
          x += chord * hx;
          y += chord * hy;
          free = !map.blocked(x, y);
          const double t = hx * cr - hy * sr;
          hy = hx * sr + hy * cr;
          hx = t;
        }
        next = integrate(node.pose, prim.curvature, prim.length);
        free = free && !map.blocked(next.x, next.y);
      }
      if (!free) continue;
      const std::int64_t nk = key(next);
      if (closed[nk]) continue;
      const double g = node.g + prim.cost;
      if (best_g[nk] <= g) continue;
      best_g[nk] = g;
      nodes.push_back({next, g, index, prim.motion, prim.curvature});
      open.emplace(g + heuristic(next), counter++, static_cast<int>(nodes.size() - 1));
    }
  }
  throw NoPath(expansions > params.max_expansions ? "plan: expansion budget exhausted"
                                                  : "plan: goal unreachable");
}

PathTracker::PathTracker(PlannedPath path, const PlannerParams& params, std::optional<Pose2> goal)
    : path_(std::move(path)), params_(params), goal_(goal) {
  if (path_.waypoints.empty()) throw Error("PathTracker: empty path");
  samples_ = path_.sample(0.01);
  arc_.assign(samples_.size(), 0.0);
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    arc_[i] = arc_[i - 1] + std::hypot(samples_[i].x - samples_[i - 1].x, samples_[i].y - samples_[i - 1].y);
  }
  runs_.clear();
  std::size_t run_begin = 0;
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    const bool boundary = i + 1 < samples_.size() && samples_[i + 1].direction != samples_[i].direction;
    if (boundary) {
      runs_.push_back({run_begin, i, samples_[i].direction});
      run_begin = i;
    }
  }
  runs_.push_back({run_begin, samples_.size() - 1, samples_.back().direction});
}

PathTracker::Output PathTracker::update(const RootPose& root) {
  const Waypoint& last = samples_.back();
  const Pose2 final = goal_.value_or(Pose2{last.x, last.y, last.theta});
  auto near = [&](const Waypoint& w, double pos_tol, double yaw_tol) {
    return std::hypot(root.x - w.x, root.y - w.y) <= pos_tol &&
           std::abs(wrap_angle(root.yaw - w.theta)) <= yaw_tol;
  };
  auto pose_of = [&](const Waypoint& w) { return RootPose{w.x, w.y, root.z, w.theta}; };

  for (int guard = 0; guard < 1000; ++guard) {
    const Run& run = runs_[run_];
    const bool last_run = run_ + 1 == runs_.size();
    if (last_run && near({final.x, final.y, final.theta}, params_.goal_position_tolerance,
                         params_.goal_heading_tolerance)) {
      return {{final.x, final.y, root.z, final.theta}, true};
    }
    if (run.motion == Motion::kTurnInPlace) {
      const Waypoint& end = samples_[run.end];
      if (!last_run && near(end, params_.goal_position_tolerance / 2.0, 0.05)) {
        progress_ = runs_[++run_].begin;
        continue;
      }
      return {pose_of(end), false};
    }
    // Project onto the run, searching at most 1 m ahead of the current progress.
    progress_ = std::max(progress_, run.begin);
    std::size_t best = progress_;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = progress_; i <= run.end && arc_[i] - arc_[progress_] <= 1.0; ++i) {
      const double d = std::hypot(root.x - samples_[i].x, root.y - samples_[i].y);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    progress_ = best;
    std::size_t carrot = progress_;
    while (carrot < run.end && arc_[carrot] - arc_[progress_] < params_.lookahead - 1e-9) ++carrot;
    if (carrot == run.end && !last_run &&
        near(samples_[run.end], params_.goal_position_tolerance / 2.0, 0.2)) {
      progress_ = runs_[++run_].begin;
      continue;
    }
    return {pose_of(samples_[carrot]), false};
  }
  return {{final.x, final.y, root.z, final.theta}, false};
}

}  // namespace eeroot
