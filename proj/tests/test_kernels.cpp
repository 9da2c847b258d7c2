// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "strokefield/kernels.hpp"
#include "strokefield/spline.hpp"
#include "test_util.hpp"

using namespace strokefield;
using namespace sftest;

namespace {

struct Points {
  std::vector<double> x, y, z;
};

Points random_points(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  Points p;
  for (std::size_t i = 0; i < n; ++i) {
    p.x.push_back(uni(rng, lo, hi));
    p.y.push_back(uni(rng, lo, hi));
    p.z.push_back(uni(rng, lo, hi));
  }
  return p;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

const BaseShape kBases[] = {BaseShape::Sphere, BaseShape::Cube, BaseShape::RoundCube, BaseShape::Line,
                            BaseShape::Triprism, BaseShape::Octahedron, BaseShape::Tetrahedron};

BasicParams basic_for(BaseShape b) {
  if (b == BaseShape::RoundCube) return {0.1, 0.0};
  if (b == BaseShape::Triprism) return {0.5, 0.0};
  if (b == BaseShape::Line) return {1.0, 0.5};
  return {0.0, 0.0};
}

}  // namespace

TEST_CASE("scalar table matches the pointwise functions") {
  const auto& s = kernels::scalar_table();
  std::mt19937_64 rng(1);
  const std::size_t n = 37;  // not a multiple of the vector width
  const Points p = random_points(rng, n, -2, 2);
  for (BaseShape b : kBases) {
    std::vector<double> out(n);
    s.base_sdf(b, basic_for(b), p.x.data(), p.y.data(), p.z.data(), n, out.data());
    for (std::size_t i = 0; i < n; ++i) CHECK(out[i] == base_sdf(b, {p.x[i], p.y[i], p.z[i]}, basic_for(b)));
  }
  std::vector<double> sdf(n), delta(n), a(n), da(n);
  for (std::size_t i = 0; i < n; ++i) {
    sdf[i] = uni(rng, -1, 1);
    delta[i] = uni(rng, 0.01, 0.5);
  }
  s.laplace_alpha(sdf.data(), delta.data(), n, a.data(), da.data());
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(a[i] - region_alpha(sdf[i], delta[i])) < 1e-15);
}

TEST_CASE("avx2 variants agree with the scalar reference") {
  const kernels::KernelTable* v = kernels::avx2_table();
  if (!v) {
    MESSAGE("AVX2 kernels unavailable on this machine; equivalence not exercised");
    return;
  }
  const auto& s = kernels::scalar_table();
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    const Points p = random_points(rng, n, -2.5, 2.5);
    for (BaseShape b : kBases) {
      const BasicParams bp = basic_for(b);
      std::vector<double> o1(n), o2(n);
      s.base_sdf(b, bp, p.x.data(), p.y.data(), p.z.data(), n, o1.data());
      v->base_sdf(b, bp, p.x.data(), p.y.data(), p.z.data(), n, o2.data());
      CHECK(max_abs_diff(o1, o2) < 1e-12);

      std::vector<std::vector<double>> g1(6, std::vector<double>(n)), g2(6, std::vector<double>(n));
      s.base_sdf_grad(b, bp, p.x.data(), p.y.data(), p.z.data(), n, g1[0].data(), g1[1].data(), g1[2].data(),
                      g1[3].data(), g1[4].data(), g1[5].data());
      v->base_sdf_grad(b, bp, p.x.data(), p.y.data(), p.z.data(), n, g2[0].data(), g2[1].data(), g2[2].data(),
                       g2[3].data(), g2[4].data(), g2[5].data());
      for (int c = 0; c < 6; ++c) CHECK(max_abs_diff(g1[c], g2[c]) < 1e-10);
    }

    std::vector<double> sdf(n), delta(n), a1(n), a2(n), d1(n), d2(n);
    for (std::size_t i = 0; i < n; ++i) {
      sdf[i] = uni(rng, -3, 3);
      delta[i] = uni(rng, 1e-3, 1.0);
    }
    s.laplace_alpha(sdf.data(), delta.data(), n, a1.data(), d1.data());
    v->laplace_alpha(sdf.data(), delta.data(), n, a2.data(), d2.data());
    CHECK(max_abs_diff(a1, a2) < 1e-12);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(d1[i] - d2[i]) <= 1e-12 * std::max(1.0, std::abs(d1[i])));

    SplineStroke sp = random_spline(rng, SplineKind::CubicBezier);
    std::vector<Vec3> verts;
    for (int i = 0; i <= 32; ++i) verts.push_back(eval_spline(sp.kind, sp.control_points, i / 32.0));
    std::vector<double> t1(n), t2(n), dist1(n), dist2(n);
    s.segment_nearest(verts.data(), 32, p.x.data(), p.y.data(), p.z.data(), n, t1.data(), dist1.data());
    v->segment_nearest(verts.data(), 32, p.x.data(), p.y.data(), p.z.data(), n, t2.data(), dist2.data());
    CHECK(max_abs_diff(dist1, dist2) < 1e-12);
    CHECK(max_abs_diff(t1, t2) < 1e-9);
  }
}

TEST_CASE("selection by name") {
  CHECK(kernels::select("scalar"));
  CHECK(kernels::active().name == kernels::scalar_table().name);
  CHECK_FALSE(kernels::select("sse9"));
  if (kernels::avx2_table()) {
    CHECK(kernels::select("avx2"));
    CHECK(kernels::active().name == kernels::avx2_table()->name);
  } else {
    CHECK_FALSE(kernels::select("avx2"));
  }
  CHECK(kernels::select("auto"));
}
