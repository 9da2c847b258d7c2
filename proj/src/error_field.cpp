// SPDX-License-Identifier: Apache-2.0
#include "strokefield/error_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "strokefield/errors.hpp"
#include "strokefield/integrator.hpp"

namespace strokefield {

namespace {

double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

ErrorGrid::ErrorGrid(std::array<int, 3> resolution, const Aabb& bbox, double raw_fill)
    : resolution_(resolution), bbox_(bbox) {
  for (int a = 0; a < 3; ++a) {
    if (resolution[a] < 1) throw DomainError("error grid resolution must be positive");
    if (!(bbox.hi[a] > bbox.lo[a])) throw DomainError("error grid box must have positive extent");
  }
  raw_.assign(static_cast<std::size_t>(resolution[0]) * resolution[1] * resolution[2], raw_fill);
}

Vec3 ErrorGrid::voxel_center(int i, int j, int k) const {
  const Vec3 ext = bbox_.extent();
  return {bbox_.lo.x + (i + 0.5) * ext.x / resolution_[0], bbox_.lo.y + (j + 0.5) * ext.y / resolution_[1],
          bbox_.lo.z + (k + 0.5) * ext.z / resolution_[2]};
}

ErrorGrid::Stencil ErrorGrid::stencil(const Vec3& x) const {
  Stencil st;
  if (raw_.empty() || !bbox_.contains(x)) return st;
  st.inside = true;
  std::array<int, 3> i0{}, i1{};
  std::array<double, 3> f{};
  const Vec3 ext = bbox_.extent();
  for (int a = 0; a < 3; ++a) {
    const int res = resolution_[a];
    const double u = std::clamp((x[a] - bbox_.lo[a]) / ext[a] * res - 0.5, 0.0, static_cast<double>(res - 1));
    const int lo = std::min(static_cast<int>(u), std::max(res - 2, 0));
    i0[a] = lo;
    i1[a] = std::min(lo + 1, res - 1);
    f[a] = u - lo;
  }
  int c = 0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx, ++c) {
        const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
        st.index[c] = index(dx ? i1[0] : i0[0], dy ? i1[1] : i0[1], dz ? i1[2] : i0[2]);
        st.weight[c] = w;
        st.raw += w * raw_[st.index[c]];
      }
  return st;
}

double ErrorGrid::sample(const Vec3& x) const {
  const Stencil st = stencil(x);
  return st.inside ? softplus(st.raw) : 0.0;
}

double sample_error(const ErrorGrid& grid, const Vec3& x) { return grid.sample(x); }

double render_error(const ErrorGrid& grid, const Ray& ray, int n_samples, std::uint64_t ray_seed, bool jitter) {
  if (n_samples < 2) throw DomainError("render_error needs at least 2 samples");
  if (!(ray.t_far > ray.t_near)) return 0.0;
  RaySamples s;
  stratified_samples(ray.t_near, ray.t_far, n_samples, ray_seed, jitter, s);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.t.size(); ++k) sum += grid.sample(ray.origin + ray.direction * s.t[k]) * s.dt[k];
  return -std::expm1(-sum);
}

ErrorLoss error_losses(double error, const Rgb& rendered, const Rgb& gt, double k) {
  if (!(k > 1.0)) throw DomainError("error amplification k must exceed 1");
  const double d = error - norm(rendered - gt);
  if (d >= 0.0) return {d, d, 1.0};
  return {-d * k, d, -k};
}

Vec3 uniform_position(const Aabb& box, std::mt19937_64& rng) {
  const Vec3 ext = box.extent();
  const double x = u01(rng), y = u01(rng), z = u01(rng);
  return {box.lo.x + x * ext.x, box.lo.y + y * ext.y, box.lo.z + z * ext.z};
}

Vec3 propose_position(const ErrorGrid& grid, int samples, std::mt19937_64& rng) {
  if (samples < 1) throw DomainError("proposal needs at least one sample");
  Vec3 best;
  double best_e = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    const Vec3 p = uniform_position(grid.bbox(), rng);
    const double e = grid.sample(p);
    if (e > best_e) {
      best_e = e;
      best = p;
    }
  }
  return best;
}

StrokeKind StrokeKind::of(const Stroke& s) {
  StrokeKind k;
  if (const auto* p = std::get_if<PrimitiveStroke>(&s)) {
    k.primitive = p->kind;
  } else {
    k.spline = true;
    k.curve = std::get<SplineStroke>(s).kind;
  }
  return k;
}

StrokeKind StrokeKind::from_name(std::string_view name) {
  StrokeKind k;
  if (auto p = primitive_kind_from_name(name)) {
    k.primitive = *p;
    return k;
  }
  if (auto c = spline_kind_from_name(name)) {
    k.spline = true;
    k.curve = *c;
    return k;
  }
  throw UnknownKindError("unknown stroke kind '" + std::string(name) + "'");
}

std::string_view StrokeKind::name() const { return spline ? spline_name(curve) : traits(primitive).name; }

std::vector<double> default_basic_params(PrimitiveKind kind) {
  switch (traits(kind).base) {
    case BaseShape::RoundCube: return {0.1};
    case BaseShape::Triprism: return {0.5};
    case BaseShape::Line: return {1.0, 0.5};
    default: return {};
  }
}

Stroke initialize_stroke(StrokeKind kind, const Vec3& position, double size, const StrokeInit& init,
                         std::mt19937_64& rng) {
  if (!(size > 0.0)) throw DomainError("stroke size must be positive");
  if (!kind.spline) {
    PrimitiveStroke p;
    p.kind = kind.primitive;
    p.basic = default_basic_params(kind.primitive);
    p.transform.translation = position;
    p.transform.scale = {size, size, size};
    if (traits(kind.primitive).rotation)
      for (int a = 0; a < 3; ++a) p.transform.rotation[a] = (2.0 * u01(rng) - 1.0) * std::numbers::pi;
    p.color = init.color;
    p.density = init.density;
    return p;
  }
  SplineStroke s;
  s.kind = kind.curve;
  s.control_points.resize(control_count(kind.curve));
  for (Vec3& c : s.control_points) {
    Vec3 off;
    do {
      off = {2.0 * u01(rng) - 1.0, 2.0 * u01(rng) - 1.0, 2.0 * u01(rng) - 1.0};
    } while (dot(off, off) > 1.0);
    c = position + off * size;
  }
  s.r_a = s.r_b = 0.25 * size;
  s.color = init.color;
  s.density = init.density;
  return s;
}

int recycle_dead_strokes(StrokeField& field, const ErrorGrid& grid, std::vector<int>& ages,
                         double density_threshold, int min_age, double size, int proposal_samples,
                         const StrokeInit& init, std::mt19937_64& rng) {
  if (ages.size() != field.strokes.size()) throw ParameterShapeError("one age per stroke is required");
  return recycle_dead_strokes(
      field, ages, density_threshold, min_age, size, init, rng,
      [&](std::mt19937_64& r) { return propose_position(grid, proposal_samples, r); },
      [&](const Vec3&, std::mt19937_64&) { return init.color; });
}

}  // namespace strokefield
