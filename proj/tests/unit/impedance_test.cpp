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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eeroot/errors.hpp"
#include "eeroot/geometry.hpp"
#include "eeroot/impedance.hpp"

namespace eeroot {
namespace {

// Cramer's rule, written out by determinants.
Vec3 cramer_solve(const Mat3& a, const Vec3& b) {
  const double det = a.determinant();
  Vec3 x;
  for (int i = 0; i < 3; ++i) {
    Mat3 m = a;
    m.col(i) = b;
    x[i] = m.determinant() / det;
  }
  return x;
}

TEST(CompliantTarget, ZeroForceIsBitExact) {
  const Vec3 x_ref(0.123456789, -1.5, 0.7);
  const CompliantTarget t = compliant_target(x_ref, ExternalForce{}, ImpedanceGains{});
  EXPECT_EQ(t.position, x_ref);
}

TEST(CompliantTarget, DiagonalStiffness) {
  const CompliantTarget t =
      compliant_target(Vec3::Zero(), ExternalForce{{10.0, 0.0, -5.0}, "test"}, ImpedanceGains{});
  EXPECT_NEAR(t.position.x(), 0.10, 1e-10);
  EXPECT_NEAR(t.position.y(), 0.0, 1e-10);
  EXPECT_NEAR(t.position.z(), -0.05, 1e-10);
}

TEST(CompliantTarget, RandomSpdMatchesCramer) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Mat3 a;
    for (int k = 0; k < 9; ++k) a(k / 3, k % 3) = u(rng);
    const Mat3 kp = a * a.transpose() + Mat3::Identity();
    const ImpedanceGains gains(kp, Mat3::Identity(), Mat3::Identity());
    const Vec3 f(10 * u(rng), 10 * u(rng), 10 * u(rng));
    EXPECT_LT((compliant_offset(f, gains) - cramer_solve(kp, f)).norm(), 1e-8);
  }
}

TEST(CompliantTarget, LinearInForceInverseInStiffness) {
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat3 a;
  for (int k = 0; k < 9; ++k) a(k / 3, k % 3) = u(rng);
  const Mat3 kp = 50 * (a * a.transpose() + Mat3::Identity());
  const Vec3 f(3.0, -2.0, 1.0);
  const Vec3 base = compliant_offset(f, ImpedanceGains(kp, Mat3::Identity(), Mat3::Identity()));
  for (double alpha : {0.5, 2.0, 7.0}) {
    EXPECT_LT((compliant_offset(alpha * f, ImpedanceGains(kp, Mat3::Identity(), Mat3::Identity())) -
               alpha * base).norm(), 1e-12);
    EXPECT_LT((compliant_offset(f, ImpedanceGains(alpha * kp, Mat3::Identity(), Mat3::Identity())) -
               base / alpha).norm(), 1e-12);
  }
}

TEST(SpringContactForce, PlaneContact) {
  const Plane wall{{3.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}};
  EXPECT_EQ(spring_contact_force({2.98, 0.0, 1.0}, wall, 500.0).force, Vec3::Zero());
  EXPECT_FALSE(spring_contact_force({2.98, 0.0, 1.0}, wall, 500.0).in_contact());
  const ExternalForce f = spring_contact_force({3.01, 0.0, 1.0}, wall, 500.0, "wall_east");
  EXPECT_NEAR(f.force.x(), -5.0, 1e-9);
  EXPECT_EQ(f.force.y(), 0.0);
  EXPECT_EQ(f.force.z(), 0.0);
  EXPECT_EQ(f.source, "wall_east");
}

TEST(SpringContactForce, BoxFaceUsesNearestFace) {
  const Obb table{{1.0, 0.0, 0.3}, {0.5, 0.4, 0.3}, 0.0};
  // 0.004 m inside the -x side face.
  const ExternalForce f = spring_contact_force({0.504, 0.0, 0.3}, table, 500.0);
  EXPECT_NEAR(f.force.norm(), 2.0, 1e-9);
  EXPECT_NEAR(f.force.x(), -2.0, 1e-9);
  EXPECT_EQ(spring_contact_force({0.49, 0.0, 0.3}, table, 500.0).force, Vec3::Zero());
}

TEST(SpringContactForce, RotatedBoxMagnitudeIsLinear) {
  const Obb box{{0.0, 0.0, 0.5}, {0.4, 0.3, 0.5}, 0.7};
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(0.6 * u(rng), 0.6 * u(rng), 0.5 + 0.6 * u(rng));
    const auto [depth, normal] = box.penetration(p);
    const ExternalForce f = spring_contact_force(p, box, 500.0);
    EXPECT_NEAR(f.force.norm(), 500.0 * depth, 1e-9);
    if (depth > 0) {
      // Pushing out by the depth along the normal lands on the surface.
      const Vec3 out = p + (depth + 1e-9) * normal;
      EXPECT_FALSE(box.contains(out));
    }
  }
}

TEST(LowPass, SteadyStateUnchanged) {
  LowPass3 filter(0.1, 0.02);
  const Vec3 target(0.1, -0.2, 0.3);
  for (int i = 0; i < 1000; ++i) filter.update(target);
  EXPECT_LT((filter.value() - target).norm(), 1e-12);
  EXPECT_NEAR(filter.alpha(), 1.0 - std::exp(-0.2), 1e-15);
}

TEST(Geometry, PointInPolygonAgreesWithFootprint) {
  const Obb box{{1.0, -0.5, 0.3}, {0.6, 0.25, 0.3}, 0.9};
  const auto corners = box.footprint();
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector2d p(1.0 + u(rng), -0.5 + u(rng));
    EXPECT_EQ(point_in_polygon(p, corners), box.footprint_contains(p.x(), p.y()));
  }
}

}  // namespace
}  // namespace eeroot
