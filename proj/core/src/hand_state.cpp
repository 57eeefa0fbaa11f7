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

#include "eeroot/hand_state.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>

#include "eeroot/errors.hpp"

namespace eeroot {

Vec3 hanging_rotation() { return Vec3::Zero(); }

// Tool axis (-z at rest) turned to point along +x.
Vec3 forward_rotation() { return {0.0, -std::numbers::pi / 2.0, 0.0}; }

HandState HandState::parse(std::string_view name, double grasp_width) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "REST") return rest();
  if (upper == "HOLD") return hold();
  if (upper == "READY") return ready();
  if (upper == "GRASP") return grasp(grasp_width);
  throw UnknownState("unknown hand state '" + std::string(name) + "'");
}

std::string HandState::name() const {
  switch (kind) {
    case HandStateKind::kRest: return "REST";
    case HandStateKind::kHold: return "HOLD";
    case HandStateKind::kReady: return "READY";
    case HandStateKind::kGrasp: return "GRASP";
  }
  throw UnknownState("invalid hand state");
}

std::pair<EeTarget, EeTarget> hand_targets(const HandState& state, const HandStateTable& table) {
  Vec3 left;
  Vec3 rotation = forward_rotation();
  switch (state.kind) {
    case HandStateKind::kRest:
      left = table.rest;
      rotation = hanging_rotation();
      break;
    case HandStateKind::kHold: left = table.hold; break;
    case HandStateKind::kReady: left = table.ready; break;
    case HandStateKind::kGrasp:
      left = {table.grasp_forward, state.width / 2.0 - table.squeeze_margin,
              state.height.value_or(table.grasp_height)};
      break;
    default: throw UnknownState("invalid hand state");
  }
  const Vec3 right(left.x(), -left.y(), left.z());
  return {EeTarget{left, rotation}, EeTarget{right, rotation}};
}

}  // namespace eeroot
