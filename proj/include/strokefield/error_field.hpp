// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <string_view>
#include <vector>

#include "strokefield/field.hpp"
#include "strokefield/vec.hpp"

namespace strokefield {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Dense voxel field of raw values; e(x) = softplus(trilinear(raw)) inside the
/// box, 0 outside. Samples sit at voxel centers; beyond the outermost centers
/// the edge value extends to the box faces.
class ErrorGrid {
 public:
  ErrorGrid() = default;
  ErrorGrid(std::array<int, 3> resolution, const Aabb& bbox, double raw_fill);

  const std::array<int, 3>& resolution() const { return resolution_; }
  const Aabb& bbox() const { return bbox_; }
  std::size_t size() const { return raw_.size(); }
  std::vector<double>& raw() { return raw_; }
  const std::vector<double>& raw() const { return raw_; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution_[1] + j) * resolution_[0] + i;
  }
  Vec3 voxel_center(int i, int j, int k) const;

  struct Stencil {
    bool inside = false;
    std::array<std::size_t, 8> index{};
    std::array<double, 8> weight{};
    double raw = 0.0;  // interpolated raw value
  };
  Stencil stencil(const Vec3& x) const;

  /// e(x) >= 0.
  double sample(const Vec3& x) const;

 private:
  std::array<int, 3> resolution_{0, 0, 0};
  Aabb bbox_;
  std::vector<double> raw_;
};

double sample_error(const ErrorGrid& grid, const Vec3& x);

/// E(r) = 1 - exp(-sum e_k dt_k) over stratified samples of the ray.
double render_error(const ErrorGrid& grid, const Ray& ray, int n_samples, std::uint64_t ray_seed = 0,
                    bool jitter = true);

struct ErrorLoss {
  double loss;
  double d;  // E - |C - C_gt|
  double dloss_dE;
};

/// |d| * k^{max(-sgn d, 0)} with d = E - |rendered - gt|.
ErrorLoss error_losses(double error, const Rgb& rendered, const Rgb& gt, double k);

/// Best of `samples` uniform points in the grid box; ties keep the first.
Vec3 propose_position(const ErrorGrid& grid, int samples, std::mt19937_64& rng);

/// Uniform point in the box.
Vec3 uniform_position(const Aabb& box, std::mt19937_64& rng);

/// What a freshly initialized stroke looks like.
struct StrokeInit {
  double density = 10.0;
  Rgb color{0.5, 0.5, 0.5};
};

/// A stroke kind tag covering primitives and splines.
struct StrokeKind {
  bool spline = false;
  PrimitiveKind primitive = PrimitiveKind::Ellipsoid;
  SplineKind curve = SplineKind::CubicBezier;

  static StrokeKind of(const Stroke& s);
  static StrokeKind from_name(std::string_view name);  // throws UnknownKindError
  std::string_view name() const;
};

/// Primitive: translation = position, scale = size, random rotation when used,
/// mid-range basic params. Spline: control points in a ball of radius `size`
/// around position, r_a = r_b = size / 4.
Stroke initialize_stroke(StrokeKind kind, const Vec3& position, double size, const StrokeInit& init,
                         std::mt19937_64& rng);

/// Mid-range basic parameters of a primitive kind.
std::vector<double> default_basic_params(PrimitiveKind kind);

/// Replaces strokes with density below `density_threshold` and age >= min_age.
/// `choose_position` and `choose_color` decide the replacement placement.
template <class PositionFn, class ColorFn>
int recycle_dead_strokes(StrokeField& field, std::vector<int>& ages, double density_threshold, int min_age,
                         double size, const StrokeInit& init, std::mt19937_64& rng, PositionFn&& choose_position,
                         ColorFn&& choose_color) {
  int recycled = 0;
  for (std::size_t i = 0; i < field.strokes.size(); ++i) {
    if (stroke_density(field.strokes[i]) >= density_threshold || ages[i] < min_age) continue;
    const Vec3 pos = choose_position(rng);
    StrokeInit local = init;
    local.color = choose_color(pos, rng);
    field.strokes[i] = initialize_stroke(StrokeKind::of(field.strokes[i]), pos, size, local, rng);
    ages[i] = 0;
    ++recycled;
  }
  return recycled;
}

/// Error-field driven recycling: replacement positions come from propose_position.
int recycle_dead_strokes(StrokeField& field, const ErrorGrid& grid, std::vector<int>& ages,
                         double density_threshold, int min_age, double size, int proposal_samples,
                         const StrokeInit& init, std::mt19937_64& rng);

}  // namespace strokefield
