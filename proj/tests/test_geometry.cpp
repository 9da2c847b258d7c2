// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "doctest.h"
#include "strokefield/errors.hpp"
#include "strokefield/stroke_geometry.hpp"
#include "test_util.hpp"

using namespace strokefield;
using namespace sftest;

namespace {

const double kS3 = std::sqrt(3.0);

double unit(PrimitiveKind k, Vec3 p, std::vector<double> basic = {}) { return unit_sdf(k, p, basic); }

// Rz * Ry * Rx built straight from the elementary rotations.
Mat3 reference_rotation(const Vec3& e) {
  const double cx = std::cos(e.x), sx = std::sin(e.x), cy = std::cos(e.y), sy = std::sin(e.y);
  const double cz = std::cos(e.z), sz = std::sin(e.z);
  Mat3 rx, ry, rz;
  rx.m = {1, 0, 0, 0, cx, -sx, 0, sx, cx};
  ry.m = {cy, 0, sy, 0, 1, 0, -sy, 0, cy};
  rz.m = {cz, -sz, 0, sz, cz, 0, 0, 0, 1};
  return rz * ry * rx;
}

}  // namespace

TEST_CASE("closed-form unit sdf values") {
  CHECK(unit(PrimitiveKind::Sphere, {0, 0, 0}) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(unit(PrimitiveKind::Sphere, {2, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(unit(PrimitiveKind::Octahedron, {1, 0, 0})) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Octahedron, {1, 1, 1}) - 2.0 / kS3) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::AxisAlignedCube, {2, 0, 0}) - 1.0) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::AxisAlignedCube, {2, 2, 0}) - std::sqrt(2.0)) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::AxisAlignedCube, {0.5, 0, 0}) + 0.5) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::RoundCube, {2, 0, 0}, {0.1}) - 0.9) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Triprism, {0, 0, 0}, {0.5}) + 0.5) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Triprism, {0, 2, 0}, {0.5}) - 1.5) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Triprism, {0, 0, 2}, {0.5}) - 0.5) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Tetrahedron, {0, 0, 0}) + 1.0 / kS3) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Tetrahedron, {1, 0, 0})) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Tetrahedron, {0, 0, 2}) - 1.0 / kS3) < 1e-12);
  // Capsule line, half length 1, radius tapering from 0 at y=-1 to 0.5 at y=+1.
  CHECK(std::abs(unit(PrimitiveKind::Line, {1, 1, 0}, {1.0, 0.5}) - 0.5) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Line, {1, -1, 0}, {1.0, 0.5}) - 1.0) < 1e-12);
  CHECK(std::abs(unit(PrimitiveKind::Line, {0, 3, 0}, {1.0, 0.5}) - 1.5) < 1e-12);
}

TEST_CASE("wrong basic parameter count is rejected") {
  CHECK_THROWS_AS(unit_sdf(PrimitiveKind::RoundCube, {0, 0, 0}, std::vector<double>{}), ParameterShapeError);
  CHECK_THROWS_AS(unit_sdf(PrimitiveKind::Sphere, {0, 0, 0}, std::vector<double>{1.0}), ParameterShapeError);
  CHECK_THROWS_AS(unit_sdf(PrimitiveKind::Line, {0, 0, 0}, std::vector<double>{1.0}), ParameterShapeError);
}

TEST_CASE("compose_transform examples and inverse") {
  const AffinePair id = compose_transform({0, 0, 0}, {0, 0, 0}, {1, 1, 1});
  for (int i = 0; i < 16; ++i) CHECK(id.forward.m[i] == (i % 5 == 0 ? 1.0 : 0.0));
  const Vec3 moved = compose_transform({1, 2, 3}, {0, 0, 0}, {1, 1, 1}).forward.transform_point({0, 0, 0});
  CHECK(moved == Vec3{1, 2, 3});
  const Vec3 scaled = compose_transform({0, 0, 0}, {0, 0, 0}, {2, 2, 2}).forward.transform_point({1, 0, 0});
  CHECK(scaled == Vec3{2, 0, 0});
  CHECK_THROWS_AS(compose_transform({0, 0, 0}, {0, 0, 0}, {1, 0, 1}), DomainError);
  CHECK_THROWS_AS(compose_transform({0, 0, 0}, {0, 0, 0}, {1, -1, 1}), DomainError);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 t = uni3(rng, -2, 2), r = uni3(rng, -3, 3), s = uni3(rng, 0.2, 3);
    const AffinePair a = compose_transform(t, r, s);
    const Mat4 prod = a.forward * a.inverse;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(std::abs(prod(i, j) - (i == j ? 1.0 : 0.0)) < 1e-10);
    // Linear block equals T * Rz * Ry * Rx * S from elementary matrices.
    const Mat3 ref = reference_rotation(r) * Mat3::diag(s);
    const Mat3 lin = a.forward.linear();
    for (int i = 0; i < 9; ++i) CHECK(std::abs(lin.m[i] - ref.m[i]) < 1e-12);
  }
}

TEST_CASE("primitive_sdf examples") {
  PrimitiveStroke s;
  s.kind = PrimitiveKind::Sphere;
  s.transform.translation = {1, 0, 0};
  s.transform.scale = {2, 2, 2};
  const PrimitiveSdf r = primitive_sdf(s, {1, 0, 0});
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.scale_correction == 2.0);

  std::mt19937_64 rng(2);
  for (PrimitiveKind k : kAllPrimitiveKinds) {
    PrimitiveStroke p;
    p.kind = k;
    p.basic = default_basic_params(k);
    for (int i = 0; i < 20; ++i) {
      const Vec3 q = uni3(rng, -2, 2);
      CHECK(primitive_sdf(p, q).value == unit_sdf(k, q, p.basic));
    }
  }
}

TEST_CASE("oriented box sign matches an independent containment test") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    PrimitiveStroke b;
    b.kind = PrimitiveKind::OrientedBox;
    b.transform.translation = uni3(rng, -0.3, 0.3);
    b.transform.rotation = uni3(rng, -3, 3);
    b.transform.scale = uni3(rng, 0.3, 0.9);
    const Mat3 rt = reference_rotation(b.transform.rotation).transposed();
    int mismatches = 0, tested = 0;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        for (int k = 0; k < 20; ++k) {
          const Vec3 p{-1.2 + 2.4 * (i + 0.5) / 20, -1.2 + 2.4 * (j + 0.5) / 20, -1.2 + 2.4 * (k + 0.5) / 20};
          const Vec3 l = rt * (p - b.transform.translation);
          const Vec3 u{l.x / b.transform.scale.x, l.y / b.transform.scale.y, l.z / b.transform.scale.z};
          const double m = std::max({std::abs(u.x), std::abs(u.y), std::abs(u.z)});
          if (std::abs(m - 1.0) < 1e-9) continue;
          ++tested;
          const bool inside = m < 1.0;
          if ((primitive_sdf(b, p).value < 0.0) != inside) ++mismatches;
        }
    CHECK(tested > 7900);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("unit sdfs are Lipschitz over [-2,2]^3") {
  std::mt19937_64 rng(23);
  for (PrimitiveKind k : kAllPrimitiveKinds) {
    const auto basic = default_basic_params(k);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Vec3 p = uni3(rng, -2, 2), q = uni3(rng, -2, 2);
      const double d = norm(p - q);
      if (d < 1e-12) continue;
      worst = std::max(worst, std::abs(unit_sdf(k, p, basic) - unit_sdf(k, q, basic)) / d);
    }
    INFO(traits(k).name);
    CHECK(worst <= 1.5);
  }
}

TEST_CASE("sign flips across the zero level set") {
  std::mt19937_64 rng(29);
  for (PrimitiveKind k : kAllPrimitiveKinds) {
    const auto basic = default_basic_params(k);
    int found = 0;
    for (int i = 0; i < 1000; ++i) {
      // Bisect from the interior point towards a point outside.
      Vec3 a{0.0, 0.0, 0.0};
      if (k == PrimitiveKind::Line) a = {0.0, 0.5, 0.0};
      if (k == PrimitiveKind::Triprism) a = {0.0, 0.0, 0.1};
      if (unit_sdf(k, a, basic) >= 0.0) continue;
      Vec3 b = normalized(uni3(rng, -1, 1)) * 3.0 + a;
      if (unit_sdf(k, b, basic) <= 0.0) continue;
      for (int it = 0; it < 80; ++it) {
        const Vec3 m = (a + b) * 0.5;
        (unit_sdf(k, m, basic) < 0.0 ? a : b) = m;
      }
      const Vec3 x = (a + b) * 0.5;
      if (std::abs(unit_sdf(k, x, basic)) >= 1e-6) continue;
      ++found;
      const SdfGrad g = base_sdf_grad(traits(k).base, x, BasicParams{basic.size() > 0 ? basic[0] : 0.0,
                                                                     basic.size() > 1 ? basic[1] : 0.0});
      const Vec3 n = normalized(g.dp);
      CHECK(unit_sdf(k, x + n * 1e-3, basic) > 0.0);
      CHECK(unit_sdf(k, x - n * 1e-3, basic) < 0.0);
    }
    INFO(traits(k).name);
    CHECK(found > 900);
  }
}

TEST_CASE("transform round trip and sphere rotation invariance") {
  std::mt19937_64 rng(31);
  for (PrimitiveKind k : kAllPrimitiveKinds) {
    for (int i = 0; i < 50; ++i) {
      PrimitiveStroke p = random_primitive(rng, k);
      const Transform t = p.effective_transform();
      const AffinePair a = compose_transform(t.translation, t.rotation, t.scale);
      const Vec3 u = uni3(rng, -2, 2);
      CHECK(std::abs(primitive_sdf(p, a.forward.transform_point(u)).value - unit_sdf(k, u, p.basic)) < 1e-9);
    }
  }
  PrimitiveStroke s;
  s.kind = PrimitiveKind::Sphere;
  for (int i = 0; i < 50; ++i) {
    const Vec3 q = uni3(rng, -2, 2);
    const double base = primitive_sdf(s, q).value;
    s.transform.rotation = uni3(rng, -3, 3);
    CHECK(std::abs(primitive_sdf(s, q).value - base) < 1e-9);
  }
}

TEST_CASE("point and basic gradients match finite differences away from kinks") {
  std::mt19937_64 rng(37);
  const BaseShape bases[] = {BaseShape::Sphere, BaseShape::Cube, BaseShape::RoundCube, BaseShape::Line,
                             BaseShape::Triprism, BaseShape::Octahedron, BaseShape::Tetrahedron};
  for (BaseShape b : bases) {
    BasicParams bp{0.0, 0.0};
    if (b == BaseShape::RoundCube) bp = {0.1, 0.0};
    if (b == BaseShape::Triprism) bp = {0.5, 0.0};
    if (b == BaseShape::Line) bp = {1.0, 0.5};
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
      const Vec3 p = uni3(rng, -2, 2);
      const SdfGrad g = base_sdf_grad(b, p, bp);
      CHECK(g.value == doctest::Approx(base_sdf(b, p, bp)).epsilon(1e-12));
      const double h = 1e-6;
      bool smooth = true;
      Vec3 fd;
      for (int a = 0; a < 3; ++a) {
        Vec3 pp = p, pm = p;
        pp[a] += h;
        pm[a] -= h;
        const double c = (base_sdf(b, pp, bp) - base_sdf(b, pm, bp)) / (2 * h);
        Vec3 pp2 = p, pm2 = p;
        pp2[a] += 2 * h;
        pm2[a] -= 2 * h;
        if (std::abs((base_sdf(b, pp2, bp) - base_sdf(b, pm2, bp)) / (4 * h) - c) > 1e-6) smooth = false;
        fd[a] = c;
      }
      if (!smooth) continue;
      ++checked;
      for (int a = 0; a < 3; ++a) CHECK(std::abs(fd[a] - g.dp[a]) < 1e-6);
    }
    CHECK(checked > 200);
  }
}
