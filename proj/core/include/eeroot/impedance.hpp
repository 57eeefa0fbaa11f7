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

#include <string>

#include "eeroot/config.hpp"
#include "eeroot/geometry.hpp"
#include "eeroot/types.hpp"

namespace eeroot {

/// World-frame force on one end effector and the surface producing it.
struct ExternalForce {
  Vec3 force = Vec3::Zero();
  std::string source;  // empty when not in contact

  bool in_contact() const { return !source.empty(); }
};

struct CompliantTarget {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();  // equals the reference velocity
};

/// K_p^-1 f via a Cholesky solve. An exactly zero force yields an exactly zero offset.
Vec3 compliant_offset(const Vec3& force, const ImpedanceGains& gains);

/// x_imp = x_ref + K_p^-1 f_ext.
CompliantTarget compliant_target(const Vec3& x_ref, const ExternalForce& f,
                                 const ImpedanceGains& gains,
                                 const Vec3& v_ref = Vec3::Zero());

/// Linear spring k_s * penetration along the surface's outward normal.
ExternalForce spring_contact_force(const Vec3& ee, const Plane& surface, double k_s,
                                   const std::string& source = "plane");
ExternalForce spring_contact_force(const Vec3& ee, const Obb& box, double k_s,
                                   const std::string& source = "box");

/// Exact first-order low-pass, y += (1 - exp(-dt / tau)) (x - y).
class LowPass3 {
 public:
  LowPass3() = default;
  LowPass3(double time_constant, double dt);

  const Vec3& update(const Vec3& input);
  const Vec3& value() const { return value_; }
  void reset(const Vec3& value = Vec3::Zero()) { value_ = value; }
  double alpha() const { return alpha_; }

 private:
  double alpha_ = 1.0;
  Vec3 value_ = Vec3::Zero();
};

}  // namespace eeroot
