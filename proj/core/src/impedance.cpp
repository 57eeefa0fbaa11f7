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

#include "eeroot/impedance.hpp"

#include <cmath>

#include <Eigen/Cholesky>

#include "eeroot/errors.hpp"

namespace eeroot {

Vec3 compliant_offset(const Vec3& force, const ImpedanceGains& gains) {
  if (!force.allFinite()) throw NonFiniteInput("compliant_offset: non-finite force");
  if ((force.array() == 0.0).all()) return Vec3::Zero();
  const Eigen::LLT<Mat3> llt(gains.stiffness());
  if (llt.info() != Eigen::Success) throw SingularGains("stiffness is not positive-definite");
  return llt.solve(force);
}

CompliantTarget compliant_target(const Vec3& x_ref, const ExternalForce& f,
                                 const ImpedanceGains& gains, const Vec3& v_ref) {
  if ((f.force.array() == 0.0).all()) return {x_ref, v_ref};
  return {x_ref + compliant_offset(f.force, gains), v_ref};
}

ExternalForce spring_contact_force(const Vec3& ee, const Plane& surface, double k_s,
                                   const std::string& source) {
  const double depth = -surface.signed_distance(ee);
  if (!(depth > 0.0)) return {};
  return {k_s * depth * surface.normal, source};
}

ExternalForce spring_contact_force(const Vec3& ee, const Obb& box, double k_s,
                                   const std::string& source) {
  const auto [depth, normal] = box.penetration(ee);
  if (!(depth > 0.0)) return {};
  return {k_s * depth * normal, source};
}

LowPass3::LowPass3(double time_constant, double dt)
    : alpha_(time_constant > 0.0 ? 1.0 - std::exp(-dt / time_constant) : 1.0) {}

const Vec3& LowPass3::update(const Vec3& input) {
  value_ += alpha_ * (input - value_);
  return value_;
}

}  // namespace eeroot
