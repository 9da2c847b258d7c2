// SPDX-License-Identifier: Apache-2.0
#include "strokefield/gradcheck.hpp"

#include <cmath>
#include <random>

namespace strokefield {

namespace {

double uni(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

Vec3 uni3(std::mt19937_64& rng, double lo, double hi) { return {uni(rng, lo, hi), uni(rng, lo, hi), uni(rng, lo, hi)}; }

Stroke random_primitive(std::mt19937_64& rng, PrimitiveKind kind) {
  PrimitiveStroke p;
  p.kind = kind;
  p.basic = default_basic_params(kind);
  for (double& b : p.basic) b *= uni(rng, 0.8, 1.2);
  p.transform.translation = uni3(rng, -0.4, 0.4);
  p.transform.rotation = uni3(rng, -3.0, 3.0);
  p.transform.scale = uni3(rng, 0.25, 0.5);
  p.color = uni3(rng, 0.1, 0.9);
  p.density = uni(rng, 2.0, 8.0);
  return p;
}

Stroke random_spline(std::mt19937_64& rng, SplineKind kind) {
  SplineStroke s;
  s.kind = kind;
  const Vec3 c = uni3(rng, -0.3, 0.3);
  for (int i = 0; i < control_count(kind); ++i) s.control_points.push_back(c + uni3(rng, -0.5, 0.5));
  s.r_a = uni(rng, 0.1, 0.2);
  s.r_b = uni(rng, 0.1, 0.2);
  s.color = uni3(rng, 0.1, 0.9);
  s.density = uni(rng, 2.0, 8.0);
  return s;
}

}  // namespace

GradcheckProblem random_gradcheck_problem(std::uint64_t seed, int strokes, int grid_resolution) {
  std::mt19937_64 rng(seed);
  GradcheckProblem p;
  p.field.region.delta_mode = DeltaMode::Footprint;
  p.field.region.k_delta = 3.0;
  // Cycle through kinds so small fields still mix primitives and splines.
  static constexpr int kCycle[] = {1, 12, 5, 14, 6, 13, 0, 8, 2, 9, 3, 10, 4, 11, 7};
  for (int i = 0; i < strokes; ++i) {
    const int k = kCycle[i % 15];
    if (k < 12)
      p.field.strokes.push_back(random_primitive(rng, kAllPrimitiveKinds[k]));
    else
      p.field.strokes.push_back(random_spline(rng, kAllSplineKinds[k - 12]));
  }
  if (grid_resolution > 0) {
    p.grid = ErrorGrid({grid_resolution, grid_resolution, grid_resolution}, Aabb{}, 0.0);
    for (double& v : p.grid.raw()) v = uni(rng, -2.0, 1.0);
  }
  random_gradcheck_batch(p, rng(), 16, 64);
  return p;
}

void random_gradcheck_batch(GradcheckProblem& problem, std::uint64_t seed, int rays, int n_samples) {
  std::mt19937_64 rng(seed);
  RayBatch& b = problem.batch;
  b = RayBatch{};
  b.n_samples = n_samples;
  constexpr int kRes = 32;
  for (int r = 0; r < rays; ++r) {
    const double az = uni(rng, 0.0, 6.28), el = uni(rng, -0.5, 0.8);
    Camera cam;
    cam.width = cam.height = kRes;
    cam.focal = 40.0;
    cam.pose = look_at({3.0 * std::cos(el) * std::cos(az), 3.0 * std::cos(el) * std::sin(az), 3.0 * std::sin(el)},
                       {0.0, 0.0, 0.0});
    const auto all = generate_rays(cam);
    const auto px = static_cast<std::size_t>(uni(rng, 8.0, 24.0));
    const auto py = static_cast<std::size_t>(uni(rng, 8.0, 24.0));
    b.rays.push_back(all[py * kRes + px].ray);
    b.gt.push_back(uni3(rng, 0.0, 1.0));
    b.mask.push_back(uni(rng, 0.0, 1.0) < 0.5 ? 0.0 : 1.0);
    b.seeds.push_back(rng());
  }
}

GradcheckSummary run_gradcheck(GradcheckProblem& problem, const LossConfig& cfg, const FdOptions& opt) {
  ErrorGrid* grid = problem.grid.size() ? &problem.grid : nullptr;
  const ParamVector pv = encode_params(problem.field, grid, cfg.reparam);
  GradcheckSummary s;
  s.parameters = pv.size();
  s.report = finite_diff_check(pv, problem.field, grid, problem.batch, cfg, {}, opt);
  if (s.report.checked) s.worst_slice = pv.slice_of(s.report.worst_index).name;
  return s;
}

}  // namespace strokefield
