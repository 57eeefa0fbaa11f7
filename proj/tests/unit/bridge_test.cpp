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


#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <thread>
#include <vector>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "eeroot/bridge.hpp"
#include "eeroot/errors.hpp"
#include "eeroot/ws_server.hpp"

namespace eeroot {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;

ServiceOptions lockstep(std::uint64_t seed = 3) {
  ServiceOptions o;
  o.scenario.seed = seed;
  return o;
}

std::string msg(json j) {
  if (!j.contains("v")) j["v"] = 1;
  return j.dump();
}

// Collects messages until `done` returns true or the timeout passes.
std::vector<json> collect(Service& s, Service::ClientId id, const std::function<bool(const json&)>& done,
                          std::chrono::milliseconds timeout = 20s) {
  std::vector<json> out;
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    auto m = s.wait_pop(id, 20ms);
    if (!m) continue;
    out.push_back(*m);
    if (done(*m)) return out;
  }
  ADD_FAILURE() << "timed out after " << out.size() << " messages";
  return out;
}

auto of_type(const std::string& type) {
  return [type](const json& m) { return m.at("type") == type; };
}

json first_of(Service& s, Service::ClientId id, const std::string& type) { return collect(s, id, of_type(type)).back(); }

TEST(MessageQueue, DropsOldestStateWhenFull) {
  MessageQueue q(3);
  q.push({{"type", "event.a"}});
  q.push({{"type", "state"}, {"n", 1}});
  q.push({{"type", "state"}, {"n", 2}});
  q.push({{"type", "state"}, {"n", 3}});
  EXPECT_EQ(q.size(), 3u);
  EXPECT_EQ(q.dropped(), 1u);
  EXPECT_EQ(q.pop()->at("type"), "event.a");
  EXPECT_EQ(q.pop()->at("n"), 2);
  EXPECT_EQ(q.pop()->at("n"), 3);
  // No state queued: the oldest message goes.
  MessageQueue r(2);
  r.push({{"type", "x"}, {"n", 1}});
  r.push({{"type", "x"}, {"n", 2}});
  r.push({{"type", "x"}, {"n", 3}});
  EXPECT_EQ(r.pop()->at("n"), 2);
}

TEST(Service, GreetsAndRejectsMalformedMessagesButKeepsTheConnection) {
  Service s(lockstep());
  s.start();
  const auto id = s.connect();
  const json hello = first_of(s, id, "hello");
  EXPECT_EQ(hello.at("v"), 1);
  EXPECT_EQ(hello.at("client"), id);

  s.submit(id, msg({{"type", "cmd.ee_root"}, {"seq", 7}, {"command", std::vector<double>(15, 0.0)}}));
  json e = first_of(s, id, "error");
  EXPECT_EQ(e.at("code"), "BAD_DIMENSION");
  EXPECT_EQ(e.at("ref"), 7);

  s.submit(id, "{not json");
  EXPECT_EQ(first_of(s, id, "error").at("code"), "BAD_JSON");
  s.submit(id, json{{"type", "cmd.step"}, {"v", 2}}.dump());
  EXPECT_EQ(first_of(s, id, "error").at("code"), "BAD_VERSION");
  s.submit(id, msg({{"type", "cmd.fly"}}));
  EXPECT_EQ(first_of(s, id, "error").at("code"), "BAD_TYPE");
  s.submit(id, msg({{"type", "cmd.skill"}, {"name", "fly"}}));
  EXPECT_EQ(first_of(s, id, "error").at("code"), "UNKNOWN_SKILL");
  s.submit(id, msg({{"type", "cmd.skill"}, {"name", "set_hands"}, {"params", {{"state", "FLAPPING"}}}}));
  EXPECT_EQ(first_of(s, id, "error").at("code"), "BAD_PARAMS");

  // Still connected: a valid command works.
  s.submit(id, msg({{"type", "cmd.skill"}, {"name", "set_hands"}, {"params", {{"state", "HOLD"}}}}));
  const json done = first_of(s, id, "event.skill_done");
  EXPECT_EQ(done.at("outcome").at("status"), "succeeded");
}

TEST(Service, StateIsPublishedAtTwentyHertzWithSharedSequenceNumbers) {
  Service s(lockstep());
  s.start();
  const auto a = s.connect();
  const auto b = s.connect();
  s.submit(a, msg({{"type", "cmd.step"}, {"ticks", 50}}));
  auto last_state_tick = [](const json& m) { return m.at("type") == "state" && m.at("tick") == 50; };
  const auto ma = collect(s, a, last_state_tick);
  const auto mb = collect(s, b, last_state_tick);
  std::vector<std::uint64_t> seq_a, seq_b, ticks;
  for (const auto& m : ma) {
    if (m.at("type") == "state") {
      seq_a.push_back(m.at("seq"));
      ticks.push_back(m.at("tick"));
    }
  }
  for (const auto& m : mb) {
    if (m.at("type") == "state") seq_b.push_back(m.at("seq"));
  }
  EXPECT_EQ(seq_a, seq_b);
  EXPECT_EQ(seq_a.size(), 20u);  // 1 s of control ticks
  EXPECT_TRUE(std::is_sorted(seq_a.begin(), seq_a.end()));
  EXPECT_EQ(std::adjacent_find(seq_a.begin(), seq_a.end()), seq_a.end());
  // Ticks t where floor(0.4 t) advances.
  std::vector<std::uint64_t> expect;
  for (std::uint64_t t = 1; t <= 50; ++t) {
    if ((2 * t) / 5 != (2 * (t - 1)) / 5) expect.push_back(t);
  }
  EXPECT_EQ(ticks, expect);
  // All messages, per client, have strictly increasing seq.
  for (const auto* list : {&ma, &mb}) {
    for (std::size_t i = 1; i < list->size(); ++i) EXPECT_LT((*list)[i - 1].at("seq"), (*list)[i].at("seq"));
  }
  const json& st = ma.back();
  for (const char* key : {"root", "joints", "ee", "ee_targets", "forces", "hands", "carried", "objects", "command"}) {
    EXPECT_TRUE(st.contains(key)) << key;
  }
  EXPECT_EQ(st.at("joints").size(), 14u);
  EXPECT_EQ(st.at("command").size(), 16u);
}

TEST(Service, ServedInstructionMatchesHeadlessRun) {
  const std::string instruction = "Move box1 from the table to the bed.";
  const TaskGoal goal = TaskGoal::box_on("box1", "bed");

  Simulation sim(Config{}, sample_scene({.seed = 3}));
  SkillContext ctx(sim);
  ScriptedBackend backend;
  const TaskResult headless = run_task(instruction, backend, ctx, SkillRegistry::builtin(), goal);
  ASSERT_TRUE(headless.success);

  Service s(lockstep(3));
  s.start();
  const auto id = s.connect();
  s.submit(id, msg({{"type", "cmd.instruction"}, {"text", instruction}, {"backend", "scripted"}, {"goal", goal.to_json()}}));
  const auto stream = collect(s, id, of_type("event.task_done"), 60s);
  const json& done = stream.back();
  EXPECT_EQ(done.at("transcript"), headless.transcript);
  EXPECT_EQ(done.at("success"), true);
  EXPECT_EQ(done.at("stop"), "done");

  std::vector<std::string> served_calls, headless_calls;
  for (const auto& m : stream) {
    if (m.at("type") == "event.skill_done") served_calls.push_back(m.at("name"));
  }
  for (const auto& t : headless.transcript.at("turns")) {
    if (!t.at("call").is_null()) headless_calls.push_back(t.at("call").at("name"));
  }
  EXPECT_EQ(served_calls, headless_calls);
  EXPECT_EQ(std::count_if(stream.begin(), stream.end(), of_type("event.llm_trace")),
            static_cast<long>(headless.transcript.at("turns").size()));
}

#ifdef EEROOT_CLI_PATH
// The CLI `task` subcommand, the served cmd.instruction and run_task agree.
TEST(Service, ServedInstructionMatchesCliRun) {
  const std::string instruction = "Pick up box2 and put it on the sofa";
  const TaskGoal goal = TaskGoal::box_on("box2", "sofa");
  const std::string out = ::testing::TempDir() + "eeroot_cli_transcript.json";
  const std::string cmd = std::string(EEROOT_CLI_PATH) + " task --seed 11 --instruction '" + instruction +
                          "' --goal '" + goal.to_json().dump() + "' --out " + out + " 2>/dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0) << cmd;
  std::ifstream in(out);
  const json cli = json::parse(in);

  Service s(lockstep(11));
  s.start();
  const auto id = s.connect();
  s.submit(id, msg({{"type", "cmd.instruction"}, {"text", instruction}, {"goal", goal.to_json()}}));
  const json done = collect(s, id, of_type("event.task_done"), 60s).back();
  EXPECT_EQ(done.at("transcript"), cli);
  EXPECT_EQ(done.at("success"), true);
}
#endif

TEST(Service, TeleopSessionIsExclusive) {
  Service s(lockstep());
  s.start();
  const auto a = s.connect();
  const auto b = s.connect();
  s.submit(a, msg({{"type", "cmd.teleop"}, {"action", "start"}}));
  EXPECT_EQ(first_of(s, b, "event.teleop").at("active"), true);
  s.submit(b, msg({{"type", "cmd.skill"}, {"name", "set_hands"}, {"params", {{"state", "HOLD"}}}}));
  EXPECT_EQ(first_of(s, b, "error").at("code"), "TELEOP_ACTIVE");
  s.submit(b, msg({{"type", "cmd.teleop"}, {"key", "w"}}));
  EXPECT_EQ(first_of(s, b, "error").at("code"), "TELEOP_ACTIVE");
  s.submit(b, msg({{"type", "cmd.ee_root"}, {"command", std::vector<double>(16, 0.0)}}));
  EXPECT_EQ(first_of(s, b, "error").at("code"), "TELEOP_ACTIVE");
  s.submit(a, msg({{"type", "cmd.instruction"}, {"text", "Raise your hands"}}));
  EXPECT_EQ(first_of(s, a, "error").at("code"), "TELEOP_ACTIVE");
  s.submit(a, msg({{"type", "cmd.teleop"}, {"action", "stop"}}));
  EXPECT_EQ(first_of(s, b, "event.teleop").at("active"), false);
  s.submit(b, msg({{"type", "cmd.skill"}, {"name", "set_hands"}, {"params", {{"state", "HOLD"}}}}));
  EXPECT_EQ(first_of(s, b, "event.skill_done").at("outcome").at("status"), "succeeded");
}

TEST(Service, MirroredTeleopMovesHandsApartOnTheServer) {
  Service s(lockstep());
  s.start();
  const auto id = s.connect();
  s.submit(id, msg({{"type", "cmd.step"}, {"ticks", 3}}));
  const json before = first_of(s, id, "state");
  for (int i = 0; i < 5; ++i) s.submit(id, msg({{"type", "cmd.teleop"}, {"mode", "mirrored"}, {"key", "ArrowRight"}}));
  s.submit(id, msg({{"type", "cmd.step"}, {"ticks", 50}}));
  const json after = collect(s, id, [](const json& m) { return m.at("type") == "state" && m.at("tick") == 53; }).back();
  EXPECT_EQ(after.at("mode"), "teleop");
  EXPECT_EQ(after.at("hands"), "CUSTOM");
  // Start pose faces +x, so root-frame y is world y.
  const double left_dy = after["ee"]["left"]["position"][1].get<double>() - before["ee"]["left"]["position"][1].get<double>();
  const double right_dy =
      after["ee"]["right"]["position"][1].get<double>() - before["ee"]["right"]["position"][1].get<double>();
  EXPECT_NEAR(left_dy, 0.05, 0.01);
  EXPECT_NEAR(right_dy, -0.05, 0.01);
}

TEST(Service, TeleopPreemptsARunningSkill) {
  Service s(lockstep(4));
  s.start();
  const auto a = s.connect();
  const auto b = s.connect();
  const RootPose goal = approach_pose(sample_scene({.seed = 4}).furniture.front(), 0.5, 0.0, 0.0);
  s.submit(a, msg({{"type", "cmd.skill"},
                   {"name", "move_to"},
                   {"params", {{"x", goal.x}, {"y", goal.y}, {"theta", goal.yaw}}}}));
  s.submit(b, msg({{"type", "cmd.teleop"}, {"action", "start"}}));
  const json done = first_of(s, a, "event.skill_done");
  EXPECT_EQ(done.at("outcome").at("status"), "aborted") << done.dump();
  EXPECT_EQ(first_of(s, a, "event.teleop").at("owner"), b);
}

TEST(Service, CommandsDuringAStepBurstAreRejectedAsBusy) {
  Service s(lockstep());
  s.start();
  const auto a = s.connect();
  s.submit(a, msg({{"type", "cmd.skill"}, {"name", "move_to"}, {"params", {{"x", 0.5}, {"y", 0.5}, {"theta", 1.0}}}}));
  s.submit(a, msg({{"type", "cmd.skill"}, {"name", "set_hands"}, {"params", {{"state", "HOLD"}}}}));
  const auto stream = collect(s, a, of_type("event.skill_done"));
  EXPECT_TRUE(std::any_of(stream.begin(), stream.end(),
                          [](const json& m) { return m.at("type") == "error" && m.at("code") == "BUSY"; }));
}

TEST(Service, SlowClientDoesNotStallTheTickLoop) {
  ServiceOptions o = lockstep();
  o.queue_capacity = 8;
  Service s(o);
  s.start();
  const auto slow = s.connect();  // never drained
  const auto fast = s.connect();
  s.submit(fast, msg({{"type", "cmd.step"}, {"ticks", 2500}}));
  const auto stream = collect(s, fast, [](const json& m) { return m.at("type") == "state" && m.at("tick") == 2500; });
  // The reader here is also slower than the loop; whatever it missed was dropped, not delayed.
  const auto received = std::count_if(stream.begin(), stream.end(), of_type("state"));
  EXPECT_EQ(static_cast<std::size_t>(received) + s.dropped(fast), 1000u);
  EXPECT_GT(s.dropped(slow), 900u);
  std::vector<json> kept;
  while (auto m = s.pop(slow)) kept.push_back(*m);
  EXPECT_LE(kept.size(), 8u);
  EXPECT_EQ(kept.back().at("tick"), 2500);  // newest states survive
}

TEST(Service, RealtimePacingPublishesAtTheStateRate) {
  ServiceOptions o = lockstep();
  o.realtime = true;
  Service s(o);
  const auto id = s.connect();
  s.start();
  std::this_thread::sleep_for(500ms);
  s.stop();
  int states = 0;
  while (auto m = s.pop(id)) states += m->at("type") == "state";
  EXPECT_GE(states, 6);
  EXPECT_LE(states, 12);
}

TEST(Service, ResetResamplesTheScene) {
  Service s(lockstep(1));
  s.start();
  const auto id = s.connect();
  s.submit(id, msg({{"type", "cmd.reset"}, {"seed", 2}}));
  const json st = first_of(s, id, "state");
  const Scene expect = sample_scene({.seed = 2});
  EXPECT_NEAR(st["objects"][0]["center"][0].get<double>(), expect.boxes[0].body.center.x(), 1e-12);
  EXPECT_EQ(st.at("tick"), 0);
}

// ---- WebSocket transport ---------------------------------------------------

namespace beast = boost::beast;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

struct WsClient {
  explicit WsClient(std::uint16_t port) : ws(io) {
    tcp::resolver resolver(io);
    asio::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", "/");
  }
  json read() {
    beast::flat_buffer buffer;
    ws.read(buffer);
    return json::parse(beast::buffers_to_string(buffer.data()));
  }
  json read_until(const std::string& type) {
    for (;;) {
      json m = read();
      if (m.at("type") == type) return m;
    }
  }
  void write(const json& j) { ws.write(asio::buffer(msg(j))); }

  asio::io_context io;
  beast::websocket::stream<tcp::socket> ws;
};

TEST(WsServer, SpeaksTheProtocolOverWebSocket) {
  Service s(lockstep());
  s.start();
  WsServer server(s, {.address = "127.0.0.1", .port = 0});
  server.start();
  WsClient a(server.port());
  WsClient b(server.port());
  EXPECT_EQ(a.read().at("type"), "hello");
  EXPECT_EQ(b.read().at("type"), "hello");

  a.write({{"type", "cmd.ee_root"}, {"command", std::vector<double>(15, 0.0)}});
  EXPECT_EQ(a.read_until("error").at("code"), "BAD_DIMENSION");

  a.write({{"type", "cmd.step"}, {"ticks", 10}});
  const json sa = a.read_until("state");
  const json sb = b.read_until("state");
  EXPECT_EQ(sa.at("seq"), sb.at("seq"));
  EXPECT_EQ(sa.at("tick"), 3);

  a.write({{"type", "cmd.skill"}, {"name", "set_hands"}, {"params", {{"state", "READY"}}}});
  EXPECT_EQ(b.read_until("event.skill_done").at("outcome").at("status"), "succeeded");
  server.stop();
}

TEST(WsServer, PortInUseIsReported) {
  Service s(lockstep());
  WsServer first(s, {.address = "127.0.0.1", .port = 0});
  EXPECT_THROW(WsServer(s, {.address = "127.0.0.1", .port = first.port()}), Error);
  EXPECT_THROW(WsServer(s, {.address = "not-an-ip", .port = 0}), ConfigError);
}

}  // namespace
}  // namespace eeroot
