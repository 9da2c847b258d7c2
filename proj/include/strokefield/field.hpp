// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "strokefield/image.hpp"
#include "strokefield/spline.hpp"
#include "strokefield/stroke_geometry.hpp"
#include "strokefield/vec.hpp"

namespace strokefield {

class ErrorGrid;

/// How the region-function width is derived from the pixel cone.
///   Reciprocal: delta = 1 / (k_delta * r)   (r = pixel_radius * t / focal)
///   Footprint:  delta = k_delta * r
///   Constant:   delta = constant_delta
enum class DeltaMode : std::uint8_t { Reciprocal, Footprint, Constant };

enum class Composition : std::uint8_t { Overlay, Max, Softmax };

std::string_view delta_mode_name(DeltaMode mode);
std::optional<DeltaMode> delta_mode_from_name(std::string_view name);
std::string_view composition_name(Composition comp);
std::optional<Composition> composition_from_name(std::string_view name);

struct RegionConfig {
  double k_delta = 1.0;
  DeltaMode delta_mode = DeltaMode::Reciprocal;
  double constant_delta = 0.05;
  Composition composition = Composition::Overlay;
  double tau = 0.1;  // softmax temperature
  double delta_min = 1e-4;
  double delta_max = 1.0;

  void validate() const;
};

using Stroke = std::variant<PrimitiveStroke, SplineStroke>;

/// Ordered strokes; index 0 is painted first.
struct StrokeField {
  std::vector<Stroke> strokes;
  RegionConfig region;
  Rgb background{1.0, 1.0, 1.0};
  int spline_segments = kDefaultSegments;

  void validate() const;
};

const Rgb& stroke_color(const Stroke& s);
double stroke_density(const Stroke& s);
void set_stroke_density(Stroke& s, double density);

/// Scene-space sdf (splines) or unit-space sdf (primitives) plus the scale
/// correction applied to delta (1 for splines).
PrimitiveSdf stroke_sdf(const Stroke& s, const Vec3& p, int spline_segments);

struct Camera {
  int width = 64;
  int height = 64;
  double focal = 64.0;
  double pixel_radius = 0.5;
  Mat4 pose;  // camera-to-world, camera looks down -z
  double near = 0.0;
  double far = 100.0;

  void validate() const;
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit length
  double t_near = 0.0;
  double t_far = 1.0;
  double footprint = 0.0;  // pixel_radius / focal: cone radius per unit distance
};

struct PixelRay {
  Ray ray;
  int px = 0;
  int py = 0;
};

/// Laplace CDF region function: 1 - exp(s/delta)/2 inside, exp(-s/delta)/2 outside.
double region_alpha(double sdf, double delta);

/// Region width before the per-stroke clamp, from the cone radius at distance t.
double scene_delta(const RegionConfig& region, double footprint, double t);

/// Cone-adapted delta: r = pixel_radius * t / focal, delta from `mode`, divided by
/// `scale_correction`, clamped to [delta_min, delta_max].
double adaptive_delta(double pixel_radius, double t, double focal, double k_delta, double scale_correction,
                      DeltaMode mode = DeltaMode::Reciprocal, double delta_min = 1e-4, double delta_max = 1.0);

struct ComposeResult {
  double sigma = 0.0;
  Rgb color;
  std::vector<double> alphas;
};

/// Density and color at x given a region width for every stroke.
ComposeResult compose_field(const StrokeField& field, const Vec3& x, std::span<const double> per_stroke_delta);

/// Camera-to-world pose at `eye` looking at `target` (camera looks down -z).
Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up = {0.0, 0.0, 1.0});

std::vector<PixelRay> generate_rays(const Camera& camera);

/// Restricts the ray to its overlap with `box`; nullopt when it misses.
std::optional<Ray> clip_ray(const Ray& ray, const Aabb& box);

struct RenderSettings {
  int n_samples = 64;
  int importance_samples = 0;  // extra samples drawn from the first pass weights
  std::uint64_t seed = 0;
  bool jitter = true;
  std::optional<Aabb> clip_box = Aabb{};
  int threads = 0;  // 0: default worker count
};

struct RayRender {
  Rgb color;
  double opacity = 0.0;
  std::optional<double> error;
};

/// Volume-renders one ray. `ray_seed` drives the stratified jitter.
RayRender render_ray(const StrokeField& field, const Ray& ray, int n_samples, const ErrorGrid* error_grid = nullptr,
                     std::uint64_t ray_seed = 0, int importance_samples = 0, bool jitter = true);

struct RenderedImage {
  Image rgb;
  Image opacity;
};

/// Renders every pixel; the jitter of pixel i is seeded from (settings.seed, i).
RenderedImage render_image(const StrokeField& field, const Camera& camera, const RenderSettings& settings = {});

/// Per-pixel jitter seed.
std::uint64_t pixel_seed(std::uint64_t seed, std::uint64_t pixel_index);

}  // namespace strokefield
