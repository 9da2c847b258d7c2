// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <string>

#include "doctest.h"
#include "strokefield/grad.hpp"
#include "test_util.hpp"

using namespace strokefield;
using namespace sftest;

namespace {

StrokeField mixed_field(std::mt19937_64& rng) {
  StrokeField f;
  f.region.delta_mode = DeltaMode::Footprint;
  f.region.k_delta = 3.0;
  f.background = {1.0, 1.0, 1.0};
  f.strokes.push_back(random_primitive(rng, PrimitiveKind::Ellipsoid));
  f.strokes.push_back(random_primitive(rng, PrimitiveKind::OrientedBox));
  f.strokes.push_back(random_spline(rng, SplineKind::CubicBezier));
  f.strokes.push_back(random_primitive(rng, PrimitiveKind::RoundCube));
  f.strokes.push_back(random_spline(rng, SplineKind::CatmullRom));
  return f;
}

}  // namespace

TEST_CASE("finite differences agree on a mixed field") {
  std::mt19937_64 rng(11);
  StrokeField f = mixed_field(rng);
  ErrorGrid grid({16, 16, 16}, Aabb{}, 0.0);
  for (double& v : grid.raw()) v = uni(rng, -2.0, 1.0);
  const RayBatch batch = random_batch(rng, 16, 64, true);
  LossConfig cfg;
  const ParamVector pv = encode_params(f, &grid, cfg.reparam);
  const FdReport rep = finite_diff_check(pv, f, &grid, batch, cfg);
  std::printf("checked %zu skipped %zu max rel %.3g at %zu (%s)\n", rep.checked, rep.skipped.size(),
              rep.max_rel_error, rep.worst_index, pv.slice_of(rep.worst_index).name.c_str());
  for (std::size_t j = 0; j < rep.indices.size(); ++j) {
    const double a = rep.analytic[j], n = rep.numeric[j];
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
    if (rel > 1e-3)
      std::printf("  %zu %s a=%.9g n=%.9g rel=%.3g\n", rep.indices[j], pv.slice_of(rep.indices[j]).name.c_str(), a, n,
                  rel);
  }
  CHECK(rep.max_rel_error < 1e-3);
}

TEST_CASE("finite differences agree for every kind under each composition") {
  for (Composition comp : {Composition::Overlay, Composition::Max, Composition::Softmax}) {
    std::size_t checked = 0;
    double worst = 0.0;
    for (int seed = 1; seed <= 6; ++seed) {
      std::mt19937_64 rng(seed);
      StrokeField f;
      f.region.delta_mode = DeltaMode::Footprint;
      f.region.k_delta = 3.0;
      f.region.composition = comp;
      for (int j = 0; j < 5; ++j) {
        const int k = (seed * 5 + j) % 15;
        if (k < 12)
          f.strokes.push_back(random_primitive(rng, kAllPrimitiveKinds[k]));
        else
          f.strokes.push_back(random_spline(rng, kAllSplineKinds[k - 12]));
      }
      const RayBatch batch = random_batch(rng, 12, 48, true);
      LossConfig cfg;
      const ParamVector pv = encode_params(f, nullptr, cfg.reparam);
      const FdReport rep = finite_diff_check(pv, f, nullptr, batch, cfg);
      checked += rep.checked;
      worst = std::max(worst, rep.max_rel_error);
    }
    INFO("composition " << static_cast<int>(comp) << " checked " << checked);
    CHECK(checked > 60);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("color gradient vanishes for a stroke with zero weight") {
  std::mt19937_64 rng(3);
  StrokeField f;
  f.region.delta_mode = DeltaMode::Footprint;
  PrimitiveStroke far = random_primitive(rng, PrimitiveKind::Sphere);
  far.transform.translation = {0.0, 0.0, 50.0};  // outside the clip box and every ray
  f.strokes.push_back(random_primitive(rng, PrimitiveKind::Ellipsoid));
  f.strokes.push_back(far);
  const RayBatch batch = random_batch(rng, 16, 32, false);
  LossConfig cfg;
  const ParamVector pv = encode_params(f, nullptr, cfg.reparam);
  const GradResult g = loss_and_gradients(pv, f, nullptr, batch, cfg);
  for (const ParamSlice& s : pv.slices) {
    if (s.stroke != 1 || s.name.find("color") == std::string::npos) continue;
    for (std::size_t i = 0; i < s.size; ++i) CHECK(g.gradient[s.offset + i] == 0.0);
  }
}

TEST_CASE("region gradient decays away from the surface") {
  // d alpha / d sdf at sdf = 10 delta relative to sdf = delta is exp(-9).
  const double delta = 0.05;
  auto slope = [&](double s) { return (region_alpha(s + 1e-7, delta) - region_alpha(s - 1e-7, delta)) / 2e-7; };
  const double ratio = std::abs(slope(10.0 * delta)) / std::abs(slope(delta));
  CHECK(ratio < std::exp(-5.0));
  CHECK(ratio == doctest::Approx(std::exp(-9.0)).epsilon(1e-4));
}

TEST_CASE("mirrored scene gives mirrored translation gradients") {
  std::mt19937_64 rng(9);
  StrokeField f;
  f.region.delta_mode = DeltaMode::Footprint;
  PrimitiveStroke s = random_primitive(rng, PrimitiveKind::Sphere);
  s.transform.translation = {0.2, 0.1, 0.05};
  f.strokes.push_back(s);
  RayBatch batch = random_batch(rng, 8, 32, false);
  batch.jitter = false;
  StrokeField g = f;
  std::get<PrimitiveStroke>(g.strokes[0]).transform.translation.x *= -1.0;
  RayBatch mb = batch;
  for (Ray& r : mb.rays) {
    r.origin.x *= -1.0;
    r.direction.x *= -1.0;
  }
  LossConfig cfg;
  const ParamVector pf = encode_params(f, nullptr, cfg.reparam);
  const ParamVector pg = encode_params(g, nullptr, cfg.reparam);
  const GradResult a = loss_and_gradients(pf, f, nullptr, batch, cfg);
  const GradResult b = loss_and_gradients(pg, g, nullptr, mb, cfg);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  CHECK(a.gradient[0] == doctest::Approx(-b.gradient[0]).epsilon(1e-9));
  CHECK(a.gradient[1] == doctest::Approx(b.gradient[1]).epsilon(1e-9));
  CHECK(a.gradient[2] == doctest::Approx(b.gradient[2]).epsilon(1e-9));
}

TEST_CASE("perfect reconstruction leaves only the Charbonnier floor") {
  std::mt19937_64 rng(4);
  StrokeField f;
  f.region.delta_mode = DeltaMode::Footprint;
  f.strokes.push_back(random_primitive(rng, PrimitiveKind::Ellipsoid));
  RayBatch batch = random_batch(rng, 16, 32, false);
  LossConfig cfg;
  cfg.weights.den_reg = 0.0;
  cfg.weights.err = 0.0;
  cfg.weights.err_reg = 0.0;
  const ParamVector pv = encode_params(f, nullptr, cfg.reparam);
  const GradResult first = evaluate_loss(pv, f, nullptr, batch, cfg);
  batch.gt = first.colors;
  const GradResult again = evaluate_loss(pv, f, nullptr, batch, cfg);
  CHECK(again.breakdown.terms.color == doctest::Approx(std::sqrt(cfg.epsilon)).epsilon(1e-9));
}
