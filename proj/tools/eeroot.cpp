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


// eeroot command-line entry point: simulate, eval, plan, task, serve.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eeroot/errors.hpp"
#include "eeroot/eval.hpp"
#include "eeroot/locomotion.hpp"
#include "eeroot/skills.hpp"
#include "eeroot/task_manager.hpp"
#include "eeroot/world.hpp"
#if EEROOT_WITH_SERVER
#include "eeroot/bridge.hpp"
#include "eeroot/ws_server.hpp"
#endif

namespace {

using nlohmann::json;
using namespace eeroot;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::atomic<bool> g_interrupted{false};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Output to a file, or stdout when the path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw ConfigError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw Error("write failed");
  }

 private:
  std::ofstream file_;
};

Pose2 parse_triplet(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError("pose", "expected x,y,theta but got '" + text + "'");
    }
  }
  if (v.size() != 3) throw CLI::ValidationError("pose", "expected x,y,theta but got '" + text + "'");
  return {v[0], v[1], v[2]};
}

struct Common {
  std::string config_path;
  std::string scenario_path;
  std::optional<std::uint64_t> seed;

  Config config() const { return config_path.empty() ? Config{} : Config::load(config_path); }
  ScenarioSpec scenario() const {
    ScenarioSpec spec = scenario_path.empty() ? ScenarioSpec{} : ScenarioSpec::from_json(read_json_file(scenario_path));
    if (seed) spec.seed = *seed;
    return spec;
  }
};

void add_scenario_options(CLI::App& sub, Common& c) {
  sub.add_option("--scenario", c.scenario_path, "Scenario spec JSON")->check(CLI::ExistingFile);
  sub.add_option("--seed", c.seed, "Scenario seed (overrides the file)");
}

LlmOptions llm_options(const Config& cfg, const std::string& endpoint, const std::string& model) {
  LlmOptions o = LlmOptions::from_config(cfg.task);
  if (!endpoint.empty()) o.endpoint = endpoint;
  if (!model.empty()) o.model = model;
  return o;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::uint64_t ticks = 0;
  std::string record;
  std::string commands;
};

struct TimedCommand {
  std::uint64_t tick = 0;
  std::vector<double> values;
  bool relative = false;
};

std::vector<TimedCommand> load_command_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<TimedCommand> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError(where + ": " + e.what());
    }
    TimedCommand c;
    try {
      c.tick = j.at("tick").get<std::uint64_t>();
      c.values = j.at("command").get<std::vector<double>>();
      c.relative = j.value("mode", std::string("absolute")) == "relative";
    } catch (const json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
    if (c.values.size() != EeRootCommand::kSize) throw ConfigError(where + ": command needs 16 numbers");
    if (!out.empty() && c.tick < out.back().tick) throw ConfigError(where + ": ticks must not decrease");
    out.push_back(std::move(c));
  }
  return out;
}

int run_simulate(const SimulateArgs& a) {
  const Config cfg = a.common.config();
  Simulation sim(cfg, sample_scene(a.common.scenario()));
  const auto log = a.commands.empty() ? std::vector<TimedCommand>{} : load_command_log(a.commands);
  Output out(a.record);
  std::size_t next = 0;
  EeRootCommand held = sim.state().command;
  for (std::uint64_t t = 0; t < a.ticks; ++t) {
    for (; next < log.size() && log[next].tick <= t; ++next) {
      std::array<double, EeRootCommand::kSize> flat{};
      const auto base = held.encode();
      for (std::size_t i = 0; i < flat.size(); ++i) {
        flat[i] = log[next].values[i] + (log[next].relative ? base[i] : 0.0);
      }
      held = EeRootCommand::decode(flat);
    }
    sim.step(held);
    json m = sim.snapshot();
    m["type"] = "state";
    m["v"] = 1;
    m["seq"] = t;
    out.stream() << m.dump() << '\n';
  }
  out.finish();
  return kExitOk;
}

// ---- eval ----------------------------------------------------------------------

struct TrackingArgs {
  std::string config_path;
  int n = 100;
  std::uint64_t seed = 0;
  bool forces = false;
  bool no_filter = false;
  bool record = false;
  std::string out;
};

int run_eval_tracking(const TrackingArgs& a) {
  const Config cfg = a.config_path.empty() ? Config{} : Config::load(a.config_path);
  TrackingOptions o;
  o.trajectories = a.n;
  o.seed = a.seed;
  o.forces = a.forces;
  o.filter = !a.no_filter;
  o.record = a.record;
  const TrackingReport r = run_tracking_suite(o, cfg);
  std::cout << r.table();
  if (!a.out.empty()) {
    Output out(a.out);
    out.stream() << r.to_json().dump(2) << '\n';
    out.finish();
  }
  return kExitOk;
}

struct SystemArgs {
  std::string config_path;
  std::vector<std::string> categories;
  int trials = 30;
  std::uint64_t seed = 0;
  std::string backend = "scripted";
  std::string llm_endpoint;
  std::string llm_model;
  bool paraphrased = false;
  bool transcripts = false;
  int workers = 1;
  std::string out;
};

int run_eval_system(const SystemArgs& a) {
  const Config cfg = a.config_path.empty() ? Config{} : Config::load(a.config_path);
  std::vector<TaskCategory> cats;
  for (const auto& c : a.categories) {
    if (c == "all") {
      const auto all = all_task_categories();
      cats.insert(cats.end(), all.begin(), all.end());
    } else {
      try {
        cats.push_back(parse_task_category(c));
      } catch (const Error& e) {
        throw CLI::ValidationError("--category", e.what());
      }
    }
  }
  std::vector<SystemReport> reports;
  for (const TaskCategory c : cats) {
    SystemOptions o;
    o.category = c;
    o.trials = a.trials;
    o.seed = a.seed;
    o.backend = a.backend;
    o.llm = llm_options(cfg, a.llm_endpoint, a.llm_model);
    o.paraphrased = a.paraphrased;
    o.workers = a.workers;
    o.keep_transcripts = a.transcripts;
    reports.push_back(run_system_suite(o, cfg));
  }
  std::cout << system_table(reports);
  if (!a.out.empty()) {
    json j = json::array();
    for (const auto& r : reports) j.push_back(r.to_json());
    Output out(a.out);
    out.stream() << (j.size() == 1 ? j[0] : j).dump(2) << '\n';
    out.finish();
  }
  return kExitOk;
}

// ---- plan ----------------------------------------------------------------------

struct PlanArgs {
  std::string config_path;
  std::string map;
  std::string start;
  std::string goal;
  double resolution = 0.0;
  std::string out;
};

int run_plan(const PlanArgs& a) {
  const Config cfg = a.config_path.empty() ? Config{} : Config::load(a.config_path);
  const PlannerParams& params = cfg.planner;
  GridMap map = [&] {
    if (a.map.ends_with(".json")) return GridMap::from_json(read_json_file(a.map), params);
    GridMap m = GridMap::from_ascii(read_text_file(a.map), a.resolution > 0.0 ? a.resolution : params.resolution);
    m.inflate(params.inflation_radius);
    return m;
  }();
  const PlannedPath path = plan(map, parse_triplet(a.start), parse_triplet(a.goal), params);
  Output out(a.out);
  out.stream() << path.to_json().dump(2) << '\n';
  out.finish();
  return kExitOk;
}

// ---- task ----------------------------------------------------------------------

struct TaskArgs {
  Common common;
  std::string instruction;
  std::string backend = "scripted";
  std::string goal;
  std::string llm_endpoint;
  std::string llm_model;
  std::string out;
};

int run_task_command(const TaskArgs& a) {
  const Config cfg = a.common.config();
  Simulation sim(cfg, sample_scene(a.common.scenario()));
  SkillContext ctx(sim);
  const SkillRegistry registry = SkillRegistry::builtin();
  std::unique_ptr<PlannerBackend> backend;
  if (a.backend == "scripted") {
    backend = std::make_unique<ScriptedBackend>(cfg);
  } else if (a.backend == "llm") {
    backend = std::make_unique<LlmBackend>(llm_options(cfg, a.llm_endpoint, a.llm_model), registry.tool_schemas());
  } else {
    throw CLI::ValidationError("--backend", "expected scripted or llm");
  }
  TaskGoal goal;
  if (!a.goal.empty()) {
    json g;
    try {
      g = json::parse(a.goal);
    } catch (const json::parse_error&) {
      g = read_json_file(a.goal);
    }
    goal = TaskGoal::from_json(g);
  }
  const TaskResult r = run_task(a.instruction, *backend, ctx, registry, goal);
  Output out(a.out);
  out.stream() << r.transcript.dump(2) << '\n';
  out.finish();
  std::cerr << "stop=" << to_string(r.stop) << " steps=" << r.steps << " success="
            << (a.goal.empty() ? "n/a" : (r.success ? "true" : "false")) << '\n';
  return r.stop == TaskStop::kBackendUnavailable ? kExitRuntime : kExitOk;
}

// ---- serve ---------------------------------------------------------------------

struct ServeArgs {
  Common common;
  std::string address = "127.0.0.1";
  int port = 8765;
  std::string backend = "scripted";
  std::string llm_endpoint;
  std::string llm_model;
  bool realtime = false;
};

int run_serve(const ServeArgs& a) {
#if EEROOT_WITH_SERVER
  ServiceOptions o;
  o.config = a.common.config();
  o.scenario = a.common.scenario();
  o.backend = a.backend;
  o.llm = llm_options(o.config, a.llm_endpoint, a.llm_model);
  o.realtime = a.realtime;
  Service service(o);
  WsServer server(service, {.address = a.address, .port = static_cast<std::uint16_t>(a.port)});
  service.start();
  server.start();
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  std::cout << "listening on ws://" << a.address << ":" << server.port() << std::endl;
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  service.stop();
  return kExitOk;
#else
  (void)a;
  std::cerr << "error: built without the WebSocket server\n";
  return kExitRuntime;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EE-root loco-manipulation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "eeroot 0.1.0");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Roll the simulator forward and record state");
  add_scenario_options(*simulate, sim.common);
  simulate->add_option("--config", sim.common.config_path, "Config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--ticks", sim.ticks, "Control ticks to run")->required();
  simulate->add_option("--record", sim.record, "Recording path (JSON lines; stdout if omitted)");
  simulate->add_option("--commands", sim.commands, "Command log (JSON lines of {tick, command, mode})")
      ->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluation suites");
  eval->require_subcommand(1);
  TrackingArgs tr;
  auto* tracking = eval->add_subcommand("tracking", "EE tracking error and jerk");
  tracking->add_option("--config", tr.config_path, "Config JSON")->check(CLI::ExistingFile);
  tracking->add_option("--n", tr.n, "Trajectories")->check(CLI::PositiveNumber);
  tracking->add_option("--seed", tr.seed, "Base seed");
  tracking->add_flag("--forces", tr.forces, "Apply external force pulses");
  tracking->add_flag("--no-filter", tr.no_filter, "Disable the compliance low-pass");
  tracking->add_flag("--record", tr.record, "Include per-tick samples in the report");
  tracking->add_option("--out", tr.out, "Report JSON path");

  SystemArgs sy;
  auto* system = eval->add_subcommand("system", "Instruction-following task suite");
  system->add_option("--config", sy.config_path, "Config JSON")->check(CLI::ExistingFile);
  system->add_option("--category", sy.categories, "Category name(s) or 'all'")->required();
  system->add_option("--trials", sy.trials, "Trials per category")->check(CLI::PositiveNumber);
  system->add_option("--seed", sy.seed, "Base seed");
  system->add_option("--backend", sy.backend, "Planner backend")->check(CLI::IsMember({"scripted", "llm"}));
  system->add_option("--llm-endpoint", sy.llm_endpoint, "Chat-completions URL");
  system->add_option("--llm-model", sy.llm_model, "Model name");
  system->add_flag("--paraphrased", sy.paraphrased, "Use paraphrased instructions");
  system->add_flag("--transcripts", sy.transcripts, "Keep transcripts in the report");
  system->add_option("--workers", sy.workers, "Parallel trials")->check(CLI::PositiveNumber);
  system->add_option("--out", sy.out, "Report JSON path");

  PlanArgs pl;
  auto* planc = app.add_subcommand("plan", "Plan a root path on a map");
  planc->add_option("--config", pl.config_path, "Config JSON")->check(CLI::ExistingFile);
  planc->add_option("--map", pl.map, "ASCII grid (.txt) or JSON map/scene (.json)")
      ->required()
      ->check(CLI::ExistingFile);
  planc->add_option("--start", pl.start, "x,y,theta")->required();
  planc->add_option("--goal", pl.goal, "x,y,theta")->required();
  planc->add_option("--resolution", pl.resolution, "Cell size for ASCII maps, m")->check(CLI::PositiveNumber);
  planc->add_option("--out", pl.out, "Waypoint JSON path (stdout if omitted)");

  TaskArgs tk;
  auto* task = app.add_subcommand("task", "Run one instruction headless and print the transcript");
  add_scenario_options(*task, tk.common);
  task->add_option("--config", tk.common.config_path, "Config JSON")->check(CLI::ExistingFile);
  task->add_option("--instruction", tk.instruction, "Natural-language instruction")->required();
  task->add_option("--backend", tk.backend, "Planner backend")->check(CLI::IsMember({"scripted", "llm"}));
  task->add_option("--goal", tk.goal, "Goal predicate (JSON text or file)");
  task->add_option("--llm-endpoint", tk.llm_endpoint, "Chat-completions URL");
  task->add_option("--llm-model", tk.llm_model, "Model name");
  task->add_option("--out", tk.out, "Transcript path (stdout if omitted)");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Serve the WebSocket protocol");
  add_scenario_options(*serve, sv.common);
  serve->add_option("--config", sv.common.config_path, "Config JSON")->check(CLI::ExistingFile);
  serve->add_option("--address", sv.address, "Bind address");
  serve->add_option("--port", sv.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--backend", sv.backend, "Default planner backend")->check(CLI::IsMember({"scripted", "llm"}));
  serve->add_option("--llm-endpoint", sv.llm_endpoint, "Chat-completions URL");
  serve->add_option("--llm-model", sv.llm_model, "Model name");
  serve->add_flag("--realtime", sv.realtime, "Tick at wall-clock rate even when idle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim);
    if (tracking->parsed()) return run_eval_tracking(tr);
    if (system->parsed()) return run_eval_system(sy);
    if (planc->parsed()) return run_plan(pl);
    if (task->parsed()) return run_task_command(tk);
    if (serve->parsed()) return run_serve(sv);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
