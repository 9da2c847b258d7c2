// SPDX-License-Identifier: Apache-2.0
#include "strokefield/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strokefield/errors.hpp"
#include "strokefield/integrator.hpp"

namespace strokefield {

std::string_view delta_mode_name(DeltaMode mode) {
  switch (mode) {
    case DeltaMode::Reciprocal: return "reciprocal";
    case DeltaMode::Footprint: return "footprint";
    case DeltaMode::Constant: return "constant";
  }
  return "?";
}

std::optional<DeltaMode> delta_mode_from_name(std::string_view name) {
  for (DeltaMode m : {DeltaMode::Reciprocal, DeltaMode::Footprint, DeltaMode::Constant})
    if (delta_mode_name(m) == name) return m;
  return std::nullopt;
}

std::string_view composition_name(Composition comp) {
  switch (comp) {
    case Composition::Overlay: return "overlay";
    case Composition::Max: return "max";
    case Composition::Softmax: return "softmax";
  }
  return "?";
}

std::optional<Composition> composition_from_name(std::string_view name) {
  for (Composition c : {Composition::Overlay, Composition::Max, Composition::Softmax})
    if (composition_name(c) == name) return c;
  return std::nullopt;
}

void RegionConfig::validate() const {
  if (!(k_delta > 0.0)) throw DomainError("k_delta must be positive");
  if (composition == Composition::Softmax && !(tau > 0.0)) throw DomainError("softmax tau must be positive");
  if (!(delta_min > 0.0 && delta_min <= delta_max)) throw DomainError("need 0 < delta_min <= delta_max");
  if (delta_mode == DeltaMode::Constant && !(constant_delta > 0.0))
    throw DomainError("constant delta must be positive");
}

void StrokeField::validate() const {
  region.validate();
  if (spline_segments < 1) throw DomainError("spline segment count must be at least 1");
  for (const Stroke& s : strokes) std::visit([](const auto& v) { v.validate(); }, s);
}

const Rgb& stroke_color(const Stroke& s) {
  return std::visit([](const auto& v) -> const Rgb& { return v.color; }, s);
}

double stroke_density(const Stroke& s) {
  return std::visit([](const auto& v) { return v.density; }, s);
}

void set_stroke_density(Stroke& s, double density) {
  std::visit([density](auto& v) { v.density = density; }, s);
}

PrimitiveSdf stroke_sdf(const Stroke& s, const Vec3& p, int spline_segments) {
  if (const auto* prim = std::get_if<PrimitiveStroke>(&s)) return primitive_sdf(*prim, p);
  return {curve_sdf(std::get<SplineStroke>(s), p, spline_segments), 1.0};
}

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw DomainError("camera resolution must be positive");
  if (!(focal > 0.0)) throw DomainError("camera focal must be positive");
  if (!(near < far)) throw DomainError("camera near must be below far");
  const Mat3 r = pose.linear();
  const Mat3 rtr = r.transposed() * r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (std::abs(rtr(i, j) - (i == j ? 1.0 : 0.0)) > 1e-6)
        throw DomainError("camera pose rotation is not orthonormal");
}

double region_alpha(double sdf, double delta) {
  const double half = 0.5 * std::exp(-std::abs(sdf) / delta);
  return sdf <= 0.0 ? 1.0 - half : half;
}

double scene_delta(const RegionConfig& region, double footprint, double t) {
  const double r = footprint * t;
  switch (region.delta_mode) {
    case DeltaMode::Reciprocal: return r > 0.0 ? 1.0 / (region.k_delta * r) : std::numeric_limits<double>::infinity();
    case DeltaMode::Footprint: return region.k_delta * r;
    case DeltaMode::Constant: return region.constant_delta;
  }
  return region.constant_delta;
}

double adaptive_delta(double pixel_radius, double t, double focal, double k_delta, double scale_correction,
                      DeltaMode mode, double delta_min, double delta_max) {
  RegionConfig region;
  region.k_delta = k_delta;
  region.delta_mode = mode;
  const double d = scene_delta(region, pixel_radius / focal, t) / scale_correction;
  return std::clamp(d, delta_min, delta_max);
}

ComposeResult compose_field(const StrokeField& field, const Vec3& x, std::span<const double> per_stroke_delta) {
  const std::size_t n = field.strokes.size();
  if (per_stroke_delta.size() != n) throw ParameterShapeError("one delta per stroke is required");
  ComposeResult r;
  r.color = field.background;
  r.alphas.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    r.alphas[i] = region_alpha(stroke_sdf(field.strokes[i], x, field.spline_segments).value, per_stroke_delta[i]);
  if (n == 0) return r;

  switch (field.region.composition) {
    case Composition::Overlay: {
      // weight_i = alpha_i * prod_{j>i} (1 - alpha_j)
      double after = 1.0, cov_rest = 1.0;
      Rgb num;
      for (std::size_t i = n; i-- > 0;) {
        const double w = r.alphas[i] * after;
        r.sigma += stroke_density(field.strokes[i]) * w;
        num += stroke_color(field.strokes[i]) * w;
        after *= 1.0 - r.alphas[i];
      }
      cov_rest = after;
      const double coverage = 1.0 - cov_rest;
      if (coverage >= kCoverageGuard) r.color = num * (1.0 / coverage);
      break;
    }
    case Composition::Max: {
      std::size_t best = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (r.alphas[i] > r.alphas[best]) best = i;
      r.sigma = stroke_density(field.strokes[best]) * r.alphas[best];
      r.color = stroke_color(field.strokes[best]);
      break;
    }
    case Composition::Softmax: {
      const double amax = *std::max_element(r.alphas.begin(), r.alphas.end());
      double z = 0.0;
      Rgb c;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp((r.alphas[i] - amax) / field.region.tau);
        z += w;
        s += stroke_density(field.strokes[i]) * r.alphas[i] * w;
        c += stroke_color(field.strokes[i]) * w;
      }
      r.sigma = s / z;
      r.color = c * (1.0 / z);
      break;
    }
  }
  return r;
}

Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 fwd = normalized(target - eye);
  Vec3 right = cross(fwd, up);
  if (norm(right) < 1e-12) right = cross(fwd, Vec3{0.0, 1.0, 0.0});
  right = normalized(right);
  const Vec3 cam_up = cross(right, fwd);
  Mat4 m;
  for (int r = 0; r < 3; ++r) {
    m(r, 0) = right[r];
    m(r, 1) = cam_up[r];
    m(r, 2) = -fwd[r];
    m(r, 3) = eye[r];
  }
  return m;
}

std::vector<PixelRay> generate_rays(const Camera& camera) {
  camera.validate();
  std::vector<PixelRay> rays;
  rays.reserve(static_cast<std::size_t>(camera.width) * camera.height);
  const Vec3 origin = camera.pose.translation();
  const double footprint = camera.pixel_radius / camera.focal;
  for (int j = 0; j < camera.height; ++j) {
    for (int i = 0; i < camera.width; ++i) {
      const Vec3 d_cam{(i + 0.5 - 0.5 * camera.width) / camera.focal,
                       -(j + 0.5 - 0.5 * camera.height) / camera.focal, -1.0};
      PixelRay pr;
      pr.ray.origin = origin;
      pr.ray.direction = normalized(camera.pose.transform_dir(d_cam));
      pr.ray.t_near = camera.near;
      pr.ray.t_far = camera.far;
      pr.ray.footprint = footprint;
      pr.px = i;
      pr.py = j;
      rays.push_back(pr);
    }
  }
  return rays;
}

std::optional<Ray> clip_ray(const Ray& ray, const Aabb& box) {
  double t0 = ray.t_near, t1 = ray.t_far;
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a], d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.lo[a] || o > box.hi[a]) return std::nullopt;
      continue;
    }
    double ta = (box.lo[a] - o) / d, tb = (box.hi[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (!(t1 > t0)) return std::nullopt;
  Ray r = ray;
  r.t_near = t0;
  r.t_far = t1;
  return r;
}

namespace {

RayRender render_prepared(const PreparedField& pf, const ErrorGrid* grid, const Ray& ray, int n_samples,
                          std::uint64_t seed, int importance_samples, bool jitter, RayWorkspace& ws,
                          RaySamples& samples) {
  RayRender out;
  out.color = pf.background;
  if (grid) out.error = 0.0;
  if (!(ray.t_far > ray.t_near)) return out;
  stratified_samples(ray.t_near, ray.t_far, n_samples, seed, jitter, samples);
  RayOutput r = ws.forward(pf, grid, ray, samples);
  if (importance_samples > 0) {
    // Piecewise-constant pdf over the strata from the first-pass weights.
    const auto& w = ws.weights();
    const std::size_t n = w.size();
    std::vector<double> cdf(n + 1, 0.0);
    const double floor = 1e-5;
    for (std::size_t k = 0; k < n; ++k) cdf[k + 1] = cdf[k] + w[k] + floor;
    const double total = cdf[n];
    const double step = (ray.t_far - ray.t_near) / static_cast<double>(n);
    SplitMix64 g(mix_seed(seed, 0x1a2b3c4dull));
    for (int s = 0; s < importance_samples; ++s) {
      const double u = (s + (jitter ? g.uniform() : 0.5)) / importance_samples * total;
      std::size_t k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      k = std::clamp<std::size_t>(k, 1, n) - 1;
      const double frac = (u - cdf[k]) / (cdf[k + 1] - cdf[k]);
      samples.t.push_back(ray.t_near + (static_cast<double>(k) + std::clamp(frac, 0.0, 1.0)) * step);
    }
    midpoint_intervals(ray.t_near, ray.t_far, samples);
    r = ws.forward(pf, grid, ray, samples);
  }
  out.color = r.color;
  out.opacity = r.opacity;
  if (grid) out.error = r.error;
  return out;
}

}  // namespace

RayRender render_ray(const StrokeField& field, const Ray& ray, int n_samples, const ErrorGrid* error_grid,
                     std::uint64_t ray_seed, int importance_samples, bool jitter) {
  if (n_samples < 2) throw DomainError("render_ray needs at least 2 samples");
  const PreparedField pf = prepare_field(field);
  RayWorkspace ws;
  RaySamples samples;
  return render_prepared(pf, error_grid, ray, n_samples, ray_seed, importance_samples, jitter, ws, samples);
}

std::uint64_t pixel_seed(std::uint64_t seed, std::uint64_t pixel_index) { return mix_seed(seed, pixel_index); }

RenderedImage render_image(const StrokeField& field, const Camera& camera, const RenderSettings& settings) {
  if (settings.n_samples < 2) throw DomainError("render_image needs at least 2 samples");
  const PreparedField pf = prepare_field(field);
  const std::vector<PixelRay> rays = generate_rays(camera);
  RenderedImage img{Image(camera.width, camera.height, 3), Image(camera.width, camera.height, 1)};
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (rays.size() + kChunk - 1) / kChunk;
  parallel_for(chunks, settings.threads, [&](std::size_t c) {
    RayWorkspace ws;
    RaySamples samples;
    const std::size_t end = std::min(rays.size(), (c + 1) * kChunk);
    for (std::size_t idx = c * kChunk; idx < end; ++idx) {
      const PixelRay& pr = rays[idx];
      RayRender r;
      r.color = pf.background;
      std::optional<Ray> ray = pr.ray;
      if (settings.clip_box) ray = clip_ray(pr.ray, *settings.clip_box);
      if (ray)
        r = render_prepared(pf, nullptr, *ray, settings.n_samples, pixel_seed(settings.seed, idx),
                            settings.importance_samples, settings.jitter, ws, samples);
      img.rgb.set_rgb(pr.px, pr.py, r.color);
      img.opacity.at(pr.px, pr.py, 0) = r.opacity;
    }
  });
  return img;
}

}  // namespace strokefield
