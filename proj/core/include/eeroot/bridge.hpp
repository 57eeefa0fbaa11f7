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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "eeroot/config.hpp"
#include "eeroot/skills.hpp"
#include "eeroot/task_manager.hpp"
#include "eeroot/world.hpp"

namespace eeroot {

inline constexpr int kProtocolVersion = 1;

/// Error codes carried by `error` messages.
namespace wire_error {
inline constexpr const char* kBadJson = "BAD_JSON";
inline constexpr const char* kBadVersion = "BAD_VERSION";
inline constexpr const char* kBadType = "BAD_TYPE";
inline constexpr const char* kBadDimension = "BAD_DIMENSION";
inline constexpr const char* kBadParams = "BAD_PARAMS";
inline constexpr const char* kTeleopActive = "TELEOP_ACTIVE";
inline constexpr const char* kBusy = "BUSY";
inline constexpr const char* kUnknownSkill = "UNKNOWN_SKILL";
}  // namespace wire_error

/// Bounded outbound queue. When full, the oldest `state` message is dropped,
/// or the oldest message of any type if no state is queued.
class MessageQueue {
 public:
  explicit MessageQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(nlohmann::json message);
  std::optional<nlohmann::json> pop();
  std::optional<nlohmann::json> wait_pop(std::chrono::milliseconds timeout);
  std::size_t size() const;
  std::size_t dropped() const;
  void close();

 private:
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<nlohmann::json> items_;
  std::size_t capacity_;
  std::size_t dropped_ = 0;
  bool closed_ = false;
};

struct ServiceOptions {
  Config config;
  ScenarioSpec scenario;
  std::string backend = "scripted";  // default backend for cmd.instruction
  LlmOptions llm;
  /// Wall-clock pacing: tick at the control rate even when idle. Without it the
  /// simulation advances only while a skill or task runs, or on cmd.step.
  bool realtime = false;
  double state_rate = 20.0;       // Hz
  std::size_t queue_capacity = 256;
  TeleopSteps teleop_steps;
};

/// Tick loop plus protocol endpoint. Transports attach clients, feed inbound
/// text through submit() and drain each client's queue; the tick worker never
/// blocks on a client.
class Service {
 public:
  using ClientId = std::uint64_t;

  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void start();
  void stop();

  /// `notify` runs on the producing thread whenever a message is queued.
  ClientId connect(std::function<void()> notify = {});
  void disconnect(ClientId id);

  /// Thread-safe and non-blocking.
  void submit(ClientId id, std::string_view text);

  std::optional<nlohmann::json> pop(ClientId id);
  std::optional<nlohmann::json> wait_pop(ClientId id, std::chrono::milliseconds timeout);
  std::size_t dropped(ClientId id) const;

  const ServiceOptions& options() const { return options_; }

 private:
  struct Inbound {
    ClientId client;
    std::string text;
  };
  struct Client {
    std::shared_ptr<MessageQueue> queue;
    std::function<void()> notify;
  };
  enum class Activity { kIdle, kSkill, kTask };

  void run();
  void handle(const Inbound& in, bool busy);
  void handle_idle(ClientId client, const nlohmann::json& msg, const std::string& type);
  void handle_teleop(ClientId client, const nlohmann::json& msg);
  void run_skill(ClientId client, const nlohmann::json& msg);
  void run_instruction(const nlohmann::json& msg);
  void reset(const nlohmann::json& msg);
  void tick(const EeRootCommand& cmd);
  void after_tick();
  void drain_inbox();

  void send(ClientId client, nlohmann::json message);
  void broadcast(nlohmann::json message);
  void error(ClientId client, const std::string& code, const std::string& message, const nlohmann::json& ref);
  nlohmann::json state_message() const;

  ServiceOptions options_;
  SkillRegistry registry_;

  // Owned by the tick worker.
  std::unique_ptr<Simulation> sim_;
  std::unique_ptr<SkillContext> ctx_;
  Activity activity_ = Activity::kIdle;
  std::optional<ClientId> teleop_owner_;
  TeleopMode teleop_mode_ = TeleopMode::kIndependent;
  EeRootCommand held_;  // command applied on idle ticks
  nlohmann::json path_;
  std::deque<Inbound> deferred_;
  std::atomic<bool> abort_{false};
  std::chrono::steady_clock::time_point next_tick_;

  // Shared.
  mutable std::mutex clients_mutex_;
  std::map<ClientId, Client> clients_;
  ClientId next_client_ = 1;
  std::uint64_t seq_ = 0;  // guarded by clients_mutex_

  std::mutex inbox_mutex_;
  std::condition_variable inbox_ready_;
  std::deque<Inbound> inbox_;

  std::atomic<bool> running_{false};
  std::thread worker_;
};

}  // namespace eeroot
