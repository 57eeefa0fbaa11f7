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

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "eeroot/config.hpp"
#include "eeroot/types.hpp"

namespace eeroot {

enum class HandStateKind { kRest, kHold, kReady, kGrasp };

/// Named end-effector configuration. GRASP carries the object width and an
/// optional EE height in the root frame.
struct HandState {
  HandStateKind kind = HandStateKind::kRest;
  double width = 0.0;
  std::optional<double> height;

  static HandState rest() { return {HandStateKind::kRest, 0.0, std::nullopt}; }
  static HandState hold() { return {HandStateKind::kHold, 0.0, std::nullopt}; }
  static HandState ready() { return {HandStateKind::kReady, 0.0, std::nullopt}; }
  static HandState grasp(double width, std::optional<double> height = std::nullopt) {
    return {HandStateKind::kGrasp, width, height};
  }

  /// Case-insensitive "REST" | "HOLD" | "READY" | "GRASP"; throws UnknownState.
  static HandState parse(std::string_view name, double grasp_width = 0.3);

  bool locomotion_safe() const {
    return kind == HandStateKind::kRest || kind == HandStateKind::kHold;
  }
  std::string name() const;

  friend bool operator==(const HandState&, const HandState&) = default;
};

/// Root-frame (left, right) targets; left and right mirror in y.
std::pair<EeTarget, EeTarget> hand_targets(const HandState& state, const HandStateTable& table);

/// Hand orientation for REST (hanging) and for the forward-facing states.
Vec3 hanging_rotation();
Vec3 forward_rotation();

}  // namespace eeroot
