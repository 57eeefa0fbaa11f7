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


#include "eeroot/task_manager.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

// After Eigen: resolv.h defines _res.
#include <httplib.h>

#include "eeroot/errors.hpp"

namespace eeroot {

using nlohmann::json;

LlmOptions LlmOptions::from_config(const TaskParams& p) {
  LlmOptions o;
  o.endpoint = p.llm_endpoint;
  o.model = p.llm_model;
  o.timeout = p.llm_timeout;
  o.retries = p.llm_retries;
  return o;
}

namespace {

json strip_x_keys(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key().rfind("x-", 0) != 0) out[it.key()] = strip_x_keys(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(strip_x_keys(e));
    return out;
  }
  return j;
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("invalid LLM endpoint URL: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

json plain_tool_schemas(const json& tools) { return strip_x_keys(tools); }

LlmBackend::LlmBackend(LlmOptions options, json tools)
    : options_(std::move(options)), tools_(plain_tool_schemas(tools)) {
  if (options_.api_key.empty()) {
    if (const char* key = std::getenv("EEROOT_LLM_API_KEY")) options_.api_key = key;
  }
  split_url(options_.endpoint);
}

json LlmBackend::request(const Conversation& conv) const {
  json messages = json::array();
  messages.push_back({{"role", "system"}, {"content", conv.system_prompt}});
  messages.push_back({{"role", "user"},
                      {"content", "Instruction: " + conv.instruction +
                                      "\nCurrent observation: " + conv.initial_observation.dump()}});
  for (std::size_t i = 0; i < conv.turns.size(); ++i) {
    const Turn& t = conv.turns[i];
    json assistant{{"role", "assistant"}, {"content", t.decision.reasoning}};
    if (!t.decision.call) {
      messages.push_back(assistant);
      continue;
    }
    const std::string id = "call_" + std::to_string(i);
    const json& params = t.decision.call->params;
    assistant["tool_calls"] = json::array(
        {{{"id", id},
          {"type", "function"},
          {"function", {{"name", t.decision.call->name},
                        {"arguments", params.is_string() ? params.get<std::string>() : params.dump()}}}}});
    messages.push_back(assistant);
    messages.push_back({{"role", "tool"}, {"tool_call_id", id}, {"content", t.observation.dump()}});
  }
  return {{"model", options_.model},
          {"messages", messages},
          {"tools", tools_},
          {"tool_choice", "auto"},
          {"temperature", 0}};
}

Decision LlmBackend::parse_response(const json& response) {
  const json& message = response.at("choices").at(0).at("message");
  Decision d;
  if (message.contains("content") && message["content"].is_string()) d.reasoning = message["content"];
  if (!message.contains("tool_calls") || !message["tool_calls"].is_array() || message["tool_calls"].empty()) {
    return d;
  }
  const json& fn = message["tool_calls"][0].at("function");
  SkillCall call;
  call.name = fn.at("name").get<std::string>();
  const json& args = fn.value("arguments", json("{}"));
  if (args.is_object()) {
    call.params = args;
  } else {
    // Arguments that do not parse stay a string so validation rejects them.
    const std::string text = args.is_string() ? args.get<std::string>() : args.dump();
    call.params = json::parse(text, nullptr, false);
    if (call.params.is_discarded() || !call.params.is_object()) call.params = text;
  }
  d.call = std::move(call);
  return d;
}

Decision LlmBackend::decide(const Conversation& conv) {
  const Url url = split_url(options_.endpoint);
  const std::string body = request(conv).dump();
  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration<double>(options_.timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(seconds).count();
  client.set_connection_timeout(usec / 1000000, usec % 1000000);
  client.set_read_timeout(usec / 1000000, usec % 1000000);
  client.set_write_timeout(usec / 1000000, usec % 1000000);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 << std::min(attempt, 5)));
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendUnavailable("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    const json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      last_error = "response is not JSON";
      continue;
    }
    try {
      return parse_response(parsed);
    } catch (const json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw BackendUnavailable(options_.endpoint + " unavailable after " + std::to_string(options_.retries + 1) +
                           " attempts (" + last_error + ")");
}

}  // namespace eeroot
