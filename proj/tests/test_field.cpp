// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "strokefield/errors.hpp"
#include "strokefield/field.hpp"
#include "test_util.hpp"

using namespace strokefield;
using namespace sftest;

namespace {

PrimitiveStroke sphere_at(const Vec3& c, double r, const Rgb& color, double density) {
  PrimitiveStroke s;
  s.kind = PrimitiveKind::Sphere;
  s.transform.translation = c;
  s.transform.scale = {r, r, r};
  s.color = color;
  s.density = density;
  return s;
}

StrokeField random_field(std::mt19937_64& rng, int n, Composition comp) {
  StrokeField f;
  f.region.composition = comp;
  for (int i = 0; i < n; ++i) {
    const PrimitiveKind k = kAllPrimitiveKinds[rng() % kAllPrimitiveKinds.size()];
    f.strokes.emplace_back(random_primitive(rng, k));
  }
  return f;
}

std::vector<double> random_deltas(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> d(n);
  for (double& v : d) v = uni(rng, 0.02, 0.5);
  return d;
}

Ray ray_between(const Vec3& a, const Vec3& b) {
  Ray r;
  r.origin = a;
  r.direction = normalized(b - a);
  r.t_near = 0.0;
  r.t_far = norm(b - a);
  r.footprint = 0.005;
  return r;
}

}  // namespace

TEST_CASE("region_alpha values and symmetry") {
  CHECK(region_alpha(0.0, 0.3) == 0.5);
  CHECK(std::abs(region_alpha(-3.0, 0.3) - (1.0 - 0.5 * std::exp(-10.0))) < 1e-15);
  CHECK(std::abs(region_alpha(0.3, 0.3) - 0.5 * std::exp(-1.0)) < 1e-15);
  std::mt19937_64 rng(1);
  double prev = 1.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = uni(rng, -5, 5), d = uni(rng, 1e-3, 2);
    CHECK(std::abs(region_alpha(-s, d) + region_alpha(s, d) - 1.0) < 1e-12);
  }
  for (double s = -1.0; s <= 1.0; s += 0.01) {
    const double a = region_alpha(s, 0.2);
    CHECK(a < prev);
    prev = a;
  }
  for (double s : {-1.0, -0.1, -0.01, 0.01, 0.2, 3.0}) {
    const double indicator = s < 0.0 ? 1.0 : 0.0;
    CHECK(std::abs(region_alpha(s, 1e-4) - indicator) < 1e-4);
  }
}

TEST_CASE("adaptive_delta arithmetic") {
  // r = 0.01 -> 1/(5 * 0.01) = 20, clamped to delta_max.
  CHECK(adaptive_delta(0.5, 2.0, 100.0, 5.0, 1.0) == 1.0);
  CHECK(adaptive_delta(0.5, 2.0, 100.0, 5.0, 1.0, DeltaMode::Reciprocal, 1e-4, 100.0) ==
        doctest::Approx(20.0).epsilon(1e-12));
  CHECK(adaptive_delta(0.5, 1e-9, 100.0, 5.0, 1.0) == 1.0);
  const double one = adaptive_delta(0.5, 2.0, 100.0, 5.0, 1.0, DeltaMode::Reciprocal, 1e-4, 100.0);
  const double two = adaptive_delta(0.5, 2.0, 100.0, 5.0, 2.0, DeltaMode::Reciprocal, 1e-4, 100.0);
  CHECK(two == doctest::Approx(one / 2).epsilon(1e-12));
  CHECK(adaptive_delta(0.5, 2.0, 100.0, 5.0, 1.0, DeltaMode::Footprint) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(adaptive_delta(0.5, 1e-9, 100.0, 5.0, 1.0, DeltaMode::Footprint) == 1e-4);
}

TEST_CASE("overlay examples") {
  StrokeField f;
  f.strokes.emplace_back(sphere_at({0, 0, 0}, 1.0, {0.2, 0.4, 0.6}, 3.0));
  const double d = 0.1;
  const auto r = compose_field(f, {0.5, 0, 0}, std::vector<double>{d});
  const double a = region_alpha(-0.5, d);
  CHECK(std::abs(r.sigma - 3.0 * a) < 1e-12);
  CHECK(norm(r.color - Rgb{0.2, 0.4, 0.6}) < 1e-12);

  // Two saturated strokes: the later one wins.
  StrokeField two;
  two.strokes.emplace_back(sphere_at({0, 0, 0}, 1.0, {1, 0, 0}, 2.0));
  two.strokes.emplace_back(sphere_at({0, 0, 0}, 1.0, {0, 0, 1}, 5.0));
  const auto w = compose_field(two, {0, 0, 0}, std::vector<double>{1e-4, 1e-4});
  CHECK(std::abs(w.sigma - 5.0) < 1e-9);
  CHECK(norm(w.color - Rgb{0, 0, 1}) < 1e-9);

  const StrokeField empty;
  const auto e = compose_field(empty, {0, 0, 0}, {});
  CHECK(e.sigma == 0.0);
  CHECK(e.color == empty.background);
  CHECK(e.alphas.empty());
}

TEST_CASE("overlay partition of unity and convex colors") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    StrokeField f = random_field(rng, 1 + static_cast<int>(rng() % 6), Composition::Overlay);
    for (Stroke& s : f.strokes) set_stroke_density(s, 1.0);
    const auto deltas = random_deltas(rng, f.strokes.size());
    const Vec3 x = uni3(rng, -0.8, 0.8);
    const auto r = compose_field(f, x, deltas);
    double residual = 1.0;
    for (double a : r.alphas) residual *= 1.0 - a;
    // With unit densities sigma is the weight sum.
    CHECK(std::abs(r.sigma + residual - 1.0) < 1e-9);
    if (1.0 - residual >= 1e-6) {
      // Rounding in the normalizer grows as coverage shrinks.
      const double tol = 1e-14 / (1.0 - residual);
      for (int c = 0; c < 3; ++c) {
        double lo = 1.0, hi = 0.0;
        for (const Stroke& s : f.strokes) {
          lo = std::min(lo, stroke_color(s)[c]);
          hi = std::max(hi, stroke_color(s)[c]);
        }
        CHECK(r.color[c] >= lo - tol);
        CHECK(r.color[c] <= hi + tol);
      }
    }
  }
}

TEST_CASE("max is permutation invariant and softmax approaches it") {
  std::mt19937_64 rng(11);
  int compared = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    StrokeField f = random_field(rng, 2 + static_cast<int>(rng() % 5), Composition::Max);
    auto deltas = random_deltas(rng, f.strokes.size());
    const Vec3 x = uni3(rng, -0.6, 0.6);
    const auto base = compose_field(f, x, deltas);

    std::vector<std::size_t> perm(f.strokes.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    StrokeField g = f;
    std::vector<double> gd(deltas.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      g.strokes[i] = f.strokes[perm[i]];
      gd[i] = deltas[perm[i]];
    }
    const auto permuted = compose_field(g, x, gd);
    CHECK(permuted.sigma == base.sigma);
    CHECK(permuted.color == base.color);

    auto sorted = base.alphas;
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted[0] - sorted[1] < 0.01) continue;
    ++compared;
    f.region.composition = Composition::Softmax;
    f.region.tau = 1e-4;
    const auto soft = compose_field(f, x, deltas);
    CHECK(std::abs(soft.sigma - base.sigma) < 1e-6);
    CHECK(norm(soft.color - base.color) < 1e-6);
  }
  CHECK(compared > 500);
}

TEST_CASE("ray generation") {
  Camera cam;
  cam.width = 5;
  cam.height = 3;
  cam.focal = 4.0;
  const auto rays = generate_rays(cam);
  REQUIRE(rays.size() == 15);
  const PixelRay& center = rays[1 * 5 + 2];
  CHECK(norm(center.ray.direction - Vec3{0, 0, -1}) < 1e-6);
  const PixelRay& corner = rays[0];
  CHECK(corner.px == 0);
  CHECK(corner.py == 0);
  const Vec3 expect = normalized(Vec3{(-2.5 + 0.5) / 4.0, (1.5 - 0.5) / 4.0, -1.0});
  CHECK(norm(corner.ray.direction - expect) < 1e-12);
  for (const PixelRay& r : rays) CHECK(std::abs(norm(r.ray.direction) - 1.0) < 1e-9);

  cam.width = 10;
  cam.height = 6;
  CHECK(generate_rays(cam).size() == 4 * 15);
  cam.focal = 0.0;
  CHECK_THROWS(cam.validate());
}

TEST_CASE("render_ray closed forms") {
  const Ray ray = ray_between({0, 0, -0.9}, {0, 0, 0.9});

  const StrokeField empty;
  const RayRender e = render_ray(empty, ray, 64);
  CHECK(e.opacity == 0.0);
  CHECK(e.color == empty.background);

  StrokeField opaque;
  opaque.region.delta_mode = DeltaMode::Constant;
  opaque.region.constant_delta = 1e-4;
  opaque.strokes.emplace_back(sphere_at({0, 0, 0}, 10.0, {0.1, 0.7, 0.3}, 500.0));
  const RayRender o = render_ray(opaque, ray, 64);
  CHECK(std::abs(o.opacity - 1.0) < 1e-3);
  CHECK(norm(o.color - Rgb{0.1, 0.7, 0.3}) < 1e-3);

  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const double sigma = uni(rng, 0.1, 3.0);
    const double len = uni(rng, 0.2, 1.8);
    StrokeField h = opaque;
    set_stroke_density(h.strokes[0], sigma);
    const RayRender r = render_ray(h, ray_between({0, 0, -0.9}, {0, 0, -0.9 + len}), 256, nullptr, rng());
    CHECK(std::abs(r.opacity - (1.0 - std::exp(-sigma * len))) < 1e-3);
  }
}

TEST_CASE("opacity is monotone in density") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    StrokeField f = random_field(rng, 4, Composition::Overlay);
    f.region.delta_mode = DeltaMode::Footprint;
    f.region.k_delta = 4.0;
    const Ray ray = ray_between(uni3(rng, -1, 1) + Vec3{0, 0, -3}, uni3(rng, -1, 1) + Vec3{0, 0, 3});
    const std::uint64_t seed = rng();
    const double base = render_ray(f, ray, 64, nullptr, seed).opacity;
    for (Stroke& s : f.strokes) set_stroke_density(s, stroke_density(s) * 1.7);
    CHECK(render_ray(f, ray, 64, nullptr, seed).opacity >= base - 1e-12);
  }
}

TEST_CASE("render_image is deterministic across thread counts") {
  std::mt19937_64 rng(23);
  StrokeField f = random_field(rng, 6, Composition::Overlay);
  const Camera cam = orbit_camera(0.7, 0.3, 3.0, 24, 30.0);
  RenderSettings s;
  s.seed = 99;
  s.threads = 1;
  const RenderedImage a = render_image(f, cam, s);
  s.threads = 3;
  const RenderedImage b = render_image(f, cam, s);
  CHECK(a.rgb.data == b.rgb.data);
  CHECK(a.opacity.data == b.opacity.data);

  const RenderedImage empty = render_image(StrokeField{}, cam, s);
  for (double v : empty.rgb.data) CHECK(v == 1.0);
}
