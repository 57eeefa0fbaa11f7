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


#include <benchmark/benchmark.h>

#include "eeroot/controller.hpp"
#include "eeroot/errors.hpp"
#include "eeroot/impedance.hpp"
#include "eeroot/kinematics.hpp"
#include "eeroot/locomotion.hpp"
#include "eeroot/world.hpp"
#include "support/random_maps.hpp"

namespace eeroot {
namespace {

EePoses reachable_targets(const RobotModel& model, const RootPose& root) {
  JointVector q = model.nominal_configuration();
  q(0) += 0.4;
  q(3) -= 0.3;
  q(kArmDofs + 0) += 0.3;
  q(kArmDofs + 5) += 0.5;
  return forward_kinematics(model, root, q);
}

void BM_CompliantOffset(benchmark::State& state) {
  ImpedanceGains gains;
  Vec3 f(3.0, -2.0, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(compliant_offset(f, gains));
    f.x() += 1e-9;
  }
}
BENCHMARK(BM_CompliantOffset);

void BM_DlsIkStep(benchmark::State& state) {
  const RobotModel model;
  const RootPose root{};
  const JointVector q = model.nominal_configuration();
  const EePoses targets = reachable_targets(model, root);
  IkOptions o;
  o.root_assist = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(dls_ik_step(model, root, q, targets, o));
}
BENCHMARK(BM_DlsIkStep)->Arg(0)->Arg(1);

void BM_SolveIk(benchmark::State& state) {
  const RobotModel model;
  const RootPose root{};
  const EePoses targets = reachable_targets(model, root);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_ik(model, root, model.nominal_configuration(), targets, IkOptions{}, 200));
  }
}
BENCHMARK(BM_SolveIk)->Unit(benchmark::kMicrosecond);

void BM_ControllerTick(benchmark::State& state) {
  const Controller controller;
  ControllerState s = controller.initial_state(RootPose{});
  EeRootCommand cmd = s.command;
  cmd.ee_left.position.x() += 0.1;
  cmd.root.x += 0.2;
  for (auto _ : state) {
    s = controller.step(s, cmd);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ControllerTick);

void BM_SimulationTick(benchmark::State& state) {
  Simulation sim(Config{}, sample_scene({.seed = 1}));
  EeRootCommand cmd = sim.state().command;
  cmd.ee_right.position.y() -= 0.1;
  for (auto _ : state) sim.step(cmd);
}
BENCHMARK(BM_SimulationTick);

void BM_PlanRandomMap(benchmark::State& state) {
  const auto c = testing::random_map_case(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) {
    try {
      benchmark::DoNotOptimize(plan(c.map, c.start, c.goal));
    } catch (const Error&) {
    }
  }
}
BENCHMARK(BM_PlanRandomMap)->Arg(1)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_PlanScene(benchmark::State& state) {
  const Scene scene = sample_scene({.seed = 2});
  const PlannerParams params;
  const GridMap map = GridMap::from_scene(scene, params);
  const RootPose goal = approach_pose(scene.furniture.front(), 0.5, 0.0, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(plan(map, {0, 0, 0}, {goal.x, goal.y, goal.yaw}, params));
}
BENCHMARK(BM_PlanScene)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace eeroot

BENCHMARK_MAIN();
