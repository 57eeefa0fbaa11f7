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


#include "eeroot/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "eeroot/errors.hpp"

namespace eeroot {

using nlohmann::json;

namespace {

constexpr std::size_t kInboxCapacity = 1024;
constexpr int kMaxStepTicks = 100000;

bool is_state(const json& m) { return m.value("type", "") == "state"; }

std::optional<Vec3> vec3_field(const json& msg, const char* key, bool& bad) {
  if (!msg.contains(key)) return std::nullopt;
  const json& a = msg.at(key);
  if (!a.is_array() || a.size() != 3 || !std::all_of(a.begin(), a.end(), [](const json& x) { return x.is_number(); })) {
    bad = true;
    return std::nullopt;
  }
  return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

bool same_hands(const EeRootCommand& a, const EeRootCommand& b) {
  return a.ee_left == b.ee_left && a.ee_right == b.ee_right;
}

}  // namespace

// ---- MessageQueue ------------------------------------------------------------

void MessageQueue::push(json message) {
  {
    std::lock_guard lock(mutex_);
    if (closed_) return;
    if (items_.size() >= capacity_) {
      auto victim = std::find_if(items_.begin(), items_.end(), is_state);
      if (victim == items_.end()) victim = items_.begin();
      items_.erase(victim);
      ++dropped_;
    }
    items_.push_back(std::move(message));
  }
  ready_.notify_one();
}

std::optional<json> MessageQueue::pop() {
  std::lock_guard lock(mutex_);
  if (items_.empty()) return std::nullopt;
  json m = std::move(items_.front());
  items_.pop_front();
  return m;
}

std::optional<json> MessageQueue::wait_pop(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  ready_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
  if (items_.empty()) return std::nullopt;
  json m = std::move(items_.front());
  items_.pop_front();
  return m;
}

std::size_t MessageQueue::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::size_t MessageQueue::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

void MessageQueue::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  ready_.notify_all();
}

// ---- Service -----------------------------------------------------------------

Service::Service(ServiceOptions options) : options_(std::move(options)), registry_(SkillRegistry::builtin()) {
  options_.config.validate();
  if (options_.backend != "scripted" && options_.backend != "llm") {
    throw ConfigError("unknown backend '" + options_.backend + "'");
  }
  if (!(options_.state_rate > 0.0)) throw ConfigError("state rate must be positive");
  reset(json::object());
}

Service::~Service() { stop(); }

void Service::start() {
  if (running_.exchange(true)) return;
  next_tick_ = std::chrono::steady_clock::now();
  worker_ = std::thread([this] { run(); });
}

void Service::stop() {
  if (!running_.exchange(false)) return;
  abort_ = true;
  inbox_ready_.notify_all();
  if (worker_.joinable()) worker_.join();
  std::lock_guard lock(clients_mutex_);
  for (auto& [id, c] : clients_) c.queue->close();
}

Service::ClientId Service::connect(std::function<void()> notify) {
  ClientId id;
  {
    std::lock_guard lock(clients_mutex_);
    id = next_client_++;
    clients_[id] = {std::make_shared<MessageQueue>(options_.queue_capacity), std::move(notify)};
  }
  send(id, {{"type", "hello"},
            {"client", id},
            {"protocol", "eeroot-bridge"},
            {"state_rate", options_.state_rate},
            {"realtime", options_.realtime},
            {"backend", options_.backend}});
  return id;
}

void Service::disconnect(ClientId id) {
  {
    std::lock_guard lock(clients_mutex_);
    const auto it = clients_.find(id);
    if (it == clients_.end()) return;
    it->second.queue->close();
    clients_.erase(it);
  }
  {
    std::lock_guard lock(inbox_mutex_);
    inbox_.push_back({id, std::string()});  // empty text: client gone
  }
  inbox_ready_.notify_one();
}

void Service::submit(ClientId id, std::string_view text) {
  bool full = false;
  {
    std::lock_guard lock(inbox_mutex_);
    full = inbox_.size() >= kInboxCapacity;
    if (!full) inbox_.push_back({id, std::string(text)});
  }
  if (full) {
    error(id, wire_error::kBusy, "inbound queue full", nullptr);
    return;
  }
  inbox_ready_.notify_one();
}

std::optional<json> Service::pop(ClientId id) {
  std::shared_ptr<MessageQueue> q;
  {
    std::lock_guard lock(clients_mutex_);
    const auto it = clients_.find(id);
    if (it == clients_.end()) return std::nullopt;
    q = it->second.queue;
  }
  return q->pop();
}

std::optional<json> Service::wait_pop(ClientId id, std::chrono::milliseconds timeout) {
  std::shared_ptr<MessageQueue> q;
  {
    std::lock_guard lock(clients_mutex_);
    const auto it = clients_.find(id);
    if (it == clients_.end()) return std::nullopt;
    q = it->second.queue;
  }
  return q->wait_pop(timeout);
}

std::size_t Service::dropped(ClientId id) const {
  std::lock_guard lock(clients_mutex_);
  const auto it = clients_.find(id);
  return it == clients_.end() ? 0 : it->second.queue->dropped();
}

void Service::send(ClientId client, json message) {
  std::function<void()> notify;
  {
    std::lock_guard lock(clients_mutex_);
    const auto it = clients_.find(client);
    if (it == clients_.end()) return;
    message["v"] = kProtocolVersion;
    message["seq"] = ++seq_;
    it->second.queue->push(std::move(message));
    notify = it->second.notify;
  }
  if (notify) notify();
}

void Service::broadcast(json message) {
  std::vector<std::function<void()>> notifies;
  {
    std::lock_guard lock(clients_mutex_);
    message["v"] = kProtocolVersion;
    message["seq"] = ++seq_;
    for (auto& [id, c] : clients_) {
      c.queue->push(message);
      if (c.notify) notifies.push_back(c.notify);
    }
  }
  for (auto& n : notifies) n();
}

void Service::error(ClientId client, const std::string& code, const std::string& message, const json& ref) {
  json m{{"type", "error"}, {"code", code}, {"message", message}};
  if (!ref.is_null()) m["ref"] = ref;
  send(client, std::move(m));
}

// ---- tick worker -------------------------------------------------------------

void Service::reset(const json& msg) {
  ScenarioSpec spec = options_.scenario;
  if (msg.contains("scenario")) spec = ScenarioSpec::from_json(msg.at("scenario"));
  if (msg.contains("seed")) spec.seed = msg.at("seed").get<std::uint64_t>();
  auto sim = std::make_unique<Simulation>(options_.config, sample_scene(spec));
  ctx_.reset();
  sim_ = std::move(sim);
  ctx_ = std::make_unique<SkillContext>(*sim_);
  ctx_->abort = &abort_;
  ctx_->on_tick = [this](const Simulation&) { after_tick(); };
  ctx_->on_path = [this](const PlannedPath* p) { path_ = p == nullptr ? json(nullptr) : p->to_json(); };
  held_ = sim_->state().command;
  path_ = nullptr;
}

void Service::run() {
  while (running_) {
    std::optional<Inbound> in;
    if (!deferred_.empty()) {
      in = std::move(deferred_.front());
      deferred_.pop_front();
    } else {
      std::unique_lock lock(inbox_mutex_);
      auto ready = [&] { return !inbox_.empty() || !running_; };
      if (options_.realtime) {
        inbox_ready_.wait_until(lock, next_tick_, ready);
      } else {
        inbox_ready_.wait_for(lock, std::chrono::milliseconds(50), ready);
      }
      if (!inbox_.empty()) {
        in = std::move(inbox_.front());
        inbox_.pop_front();
      }
    }
    if (!running_) break;
    if (in) handle(*in, false);
    if (options_.realtime && std::chrono::steady_clock::now() >= next_tick_) tick(held_);
  }
}

void Service::tick(const EeRootCommand& cmd) {
  sim_->step(cmd);
  after_tick();
}

void Service::after_tick() {
  const Config& cfg = sim_->config();
  const std::uint64_t t = sim_->state().tick;
  const double per_tick = options_.state_rate * cfg.timestep;
  const auto slot = [&](std::uint64_t k) { return static_cast<std::uint64_t>(std::floor(k * per_tick + 1e-9)); };
  if (t == 0 || slot(t) != slot(t - 1)) broadcast(state_message());
  if (activity_ != Activity::kIdle) drain_inbox();
  if (options_.realtime) {
    const auto dt = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(cfg.timestep));
    const auto now = std::chrono::steady_clock::now();
    if (next_tick_ > now) std::this_thread::sleep_until(next_tick_);
    next_tick_ = std::max(next_tick_ + dt, now - 5 * dt);  // do not burst after a stall
  }
}

void Service::drain_inbox() {
  std::deque<Inbound> batch;
  {
    std::lock_guard lock(inbox_mutex_);
    batch.swap(inbox_);
  }
  for (const auto& in : batch) handle(in, true);
}

json Service::state_message() const {
  json m = sim_->snapshot();
  m["type"] = "state";
  m["hands"] = ctx_->hands ? ctx_->hands->name() : "CUSTOM";
  m["locomotion_safe"] = ctx_->hands && ctx_->hands->locomotion_safe();
  static constexpr const char* kModes[] = {"idle", "skill", "task"};
  m["mode"] = teleop_owner_ ? "teleop" : kModes[static_cast<int>(activity_)];
  m["teleop"] = {{"active", teleop_owner_.has_value()}, {"mode", to_string(teleop_mode_)}};
  m["path"] = path_;
  return m;
}

void Service::handle(const Inbound& in, bool busy) {
  if (in.text.empty()) {  // disconnect
    if (teleop_owner_ == in.client) {
      teleop_owner_.reset();
      broadcast({{"type", "event.teleop"}, {"active", false}, {"reason", "owner disconnected"}});
    }
    return;
  }
  json msg = json::parse(in.text, nullptr, false);
  if (msg.is_discarded() || !msg.is_object()) {
    error(in.client, wire_error::kBadJson, "message is not a JSON object", nullptr);
    return;
  }
  const json ref = msg.contains("seq") ? msg["seq"] : json(nullptr);
  if (!msg.contains("v") || msg["v"] != kProtocolVersion) {
    error(in.client, wire_error::kBadVersion, "expected v: 1", ref);
    return;
  }
  if (!msg.contains("type") || !msg["type"].is_string()) {
    error(in.client, wire_error::kBadType, "missing type", ref);
    return;
  }
  const std::string type = msg["type"];
  static const std::set<std::string> known = {"cmd.ee_root", "cmd.teleop", "cmd.skill", "cmd.instruction",
                                              "cmd.abort",   "cmd.reset",  "cmd.step"};
  if (!known.contains(type)) {
    error(in.client, wire_error::kBadType, "unknown message type '" + type + "'", ref);
    return;
  }
  if (type == "cmd.ee_root") {
    const json& c = msg.value("command", json());
    if (!c.is_array() || c.size() != EeRootCommand::kSize ||
        !std::all_of(c.begin(), c.end(), [](const json& x) { return x.is_number(); })) {
      error(in.client, wire_error::kBadDimension,
            "cmd.ee_root needs " + std::to_string(EeRootCommand::kSize) + " numbers, got " +
                std::to_string(c.is_array() ? c.size() : 0),
            ref);
      return;
    }
  }
  if (busy) {
    if (type == "cmd.abort") {
      abort_ = true;
    } else if (type == "cmd.teleop") {
      if (teleop_owner_ && *teleop_owner_ != in.client) {
        error(in.client, wire_error::kTeleopActive, "another client holds the teleop session", ref);
        return;
      }
      abort_ = true;  // teleop preempts the running skill or task
      deferred_.push_back(in);
    } else {
      error(in.client, wire_error::kBusy, "a skill or task is running", ref);
    }
    return;
  }
  try {
    handle_idle(in.client, msg, type);
  } catch (const ParamValidation& e) {
    error(in.client, wire_error::kBadParams, e.what(), ref);
  } catch (const UnknownState& e) {
    error(in.client, wire_error::kBadParams, e.what(), ref);
  } catch (const ConfigError& e) {
    error(in.client, wire_error::kBadParams, e.what(), ref);
  } catch (const json::exception& e) {
    error(in.client, wire_error::kBadParams, e.what(), ref);
  }
}

void Service::handle_idle(ClientId client, const json& msg, const std::string& type) {
  const json ref = msg.contains("seq") ? msg["seq"] : json(nullptr);
  const bool foreign_teleop = teleop_owner_ && *teleop_owner_ != client;
  if (type == "cmd.teleop") {
    handle_teleop(client, msg);
    return;
  }
  if (type == "cmd.abort") return;
  if (type == "cmd.step") {
    const int ticks = msg.value("ticks", 1);
    if (ticks < 0 || ticks > kMaxStepTicks) throw ParamValidation("ticks out of range");
    for (int i = 0; i < ticks; ++i) tick(held_);
    return;
  }
  if (teleop_owner_ && (foreign_teleop || type == "cmd.skill" || type == "cmd.instruction")) {
    error(client, wire_error::kTeleopActive, "teleop session active; stop it first", ref);
    return;
  }
  if (type == "cmd.ee_root") {
    std::array<double, EeRootCommand::kSize> flat{};
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = msg["command"][i].get<double>();
    const std::string mode = msg.value("mode", "absolute");
    EeRootCommand cmd = EeRootCommand::decode(flat);
    if (mode == "relative") {
      auto cur = held_.encode();
      for (std::size_t i = 0; i < flat.size(); ++i) cur[i] += flat[i];
      cmd = EeRootCommand::decode(cur);
    } else if (mode != "absolute") {
      throw ParamValidation("mode must be absolute or relative");
    }
    if (!cmd.finite()) throw ParamValidation("non-finite command");
    if (!same_hands(cmd, held_)) ctx_->hands.reset();
    held_ = cmd;
  } else if (type == "cmd.skill") {
    run_skill(client, msg);
  } else if (type == "cmd.instruction") {
    run_instruction(msg);
  } else if (type == "cmd.reset") {
    reset(msg);
    broadcast(state_message());
  }
}

void Service::handle_teleop(ClientId client, const json& msg) {
  const json ref = msg.contains("seq") ? msg["seq"] : json(nullptr);
  if (teleop_owner_ && *teleop_owner_ != client) {
    error(client, wire_error::kTeleopActive, "another client holds the teleop session", ref);
    return;
  }
  if (msg.contains("mode")) teleop_mode_ = parse_teleop_mode(msg.at("mode").get<std::string>());
  if (msg.contains("mirror")) teleop_mode_ = msg.at("mirror").get<bool>() ? TeleopMode::kMirrored : TeleopMode::kIndependent;
  const std::string action = msg.value("action", "");
  if (action == "stop") {
    if (teleop_owner_) {
      teleop_owner_.reset();
      broadcast({{"type", "event.teleop"}, {"active", false}, {"mode", to_string(teleop_mode_)}});
    }
    return;
  }
  if (!action.empty() && action != "start") throw ParamValidation("action must be start or stop");

  TeleopInput input;
  bool bad = false;
  if (msg.contains("keys")) input.keys = msg.at("keys").get<std::vector<std::string>>();
  if (msg.contains("key")) input.keys.push_back(msg.at("key").get<std::string>());
  if (auto v = vec3_field(msg, "left", bad)) input.left = *v;
  if (auto v = vec3_field(msg, "right", bad)) input.right = *v;
  if (msg.contains("root")) {
    const json& r = msg.at("root");
    if (!r.is_array() || r.size() != 4) {
      bad = true;
    } else {
      input.root = {r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>()};
    }
  }
  if (bad) {
    error(client, wire_error::kBadDimension, "teleop deltas: left/right need 3 numbers, root needs 4", ref);
    return;
  }
  input.hand = msg.value("hand", "both");

  if (!teleop_owner_) {
    teleop_owner_ = client;
    broadcast({{"type", "event.teleop"}, {"active", true}, {"owner", client}, {"mode", to_string(teleop_mode_)}});
  }
  const EeRootCommand next =
      teleop_map(held_, input, teleop_mode_, sim_->config().root, options_.teleop_steps);
  if (!same_hands(next, held_)) ctx_->hands.reset();
  held_ = next;
}

void Service::run_skill(ClientId client, const json& msg) {
  const std::string name = msg.value("name", "");
  const json params = msg.value("params", json::object());
  if (!registry_.contains(name)) {
    error(client, wire_error::kUnknownSkill, "unknown skill '" + name + "'", msg.contains("seq") ? msg["seq"] : json(nullptr));
    return;
  }
  registry_.spec(name).validate(params);  // ParamValidation -> BAD_PARAMS
  abort_ = false;
  activity_ = Activity::kSkill;
  const SkillOutcome outcome = registry_.execute(name, params, *ctx_);
  activity_ = Activity::kIdle;
  abort_ = false;
  held_ = sim_->state().command;
  broadcast({{"type", "event.skill_done"}, {"name", name}, {"params", params}, {"outcome", outcome.to_json(false)}});
}

void Service::run_instruction(const json& msg) {
  const std::string text = msg.value("text", "");
  if (text.empty()) throw ParamValidation("cmd.instruction needs non-empty text");
  const std::string backend_name = msg.value("backend", options_.backend);
  std::unique_ptr<PlannerBackend> backend;
  if (backend_name == "scripted") {
    backend = std::make_unique<ScriptedBackend>(sim_->config());
  } else if (backend_name == "llm") {
    backend = std::make_unique<LlmBackend>(options_.llm, registry_.tool_schemas());
  } else {
    throw ParamValidation("backend must be scripted or llm");
  }
  const bool has_goal = msg.contains("goal") && !msg["goal"].is_null();
  const TaskGoal goal = has_goal ? TaskGoal::from_json(msg["goal"]) : TaskGoal{};

  TaskOptions topts;
  topts.max_iterations = sim_->config().task.max_iterations;
  topts.abort = &abort_;
  topts.on_turn = [this](const json& turn) {
    json trace{{"type", "event.llm_trace"}, {"iteration", turn.at("iteration")}, {"reasoning", turn.at("reasoning")},
               {"call", turn.at("call")}};
    broadcast(std::move(trace));
    if (!turn.at("call").is_null()) {
      broadcast({{"type", "event.skill_done"},
                 {"name", turn["call"]["name"]},
                 {"params", turn["call"]["params"]},
                 {"outcome", turn.at("outcome")},
                 {"executed", turn.at("executed")}});
    }
  };
  abort_ = false;
  activity_ = Activity::kTask;
  const TaskResult r = run_task(text, *backend, *ctx_, registry_, goal, topts);
  activity_ = Activity::kIdle;
  abort_ = false;
  held_ = sim_->state().command;
  broadcast({{"type", "event.task_done"},
             {"instruction", text},
             {"backend", backend->name()},
             {"success", has_goal ? json(r.success) : json(nullptr)},
             {"stop", to_string(r.stop)},
             {"stop_detail", r.stop_detail},
             {"steps", r.steps},
             {"iterations", r.iterations},
             {"elapsed_sim_time", r.elapsed_sim_time},
             {"transcript", r.transcript}});
}

}  // namespace eeroot
