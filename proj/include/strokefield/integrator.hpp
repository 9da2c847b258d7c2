// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "strokefield/error_field.hpp"
#include "strokefield/field.hpp"

// Per-ray forward/backward evaluation shared by the renderer and the gradient
// engine. A StrokeField is flattened once into PreparedField; each ray then
// runs through a RayWorkspace that keeps the forward state needed to
// backpropagate a loss gradient given at the ray outputs.

namespace strokefield {

/// Margin of the ray/stroke interval test, in units of the stroke's largest
/// region width on the ray. Outside it alpha < exp(-margin) / 2.
inline constexpr double kCullMargin = 40.0;

/// Coverage below which the normalized overlay color falls back to background.
inline constexpr double kCoverageGuard = 1e-6;

struct PreparedStroke {
  bool spline = false;
  Rgb color;
  double density = 0.0;

  // primitive
  PrimitiveKind kind = PrimitiveKind::Sphere;
  BaseShape base = BaseShape::Sphere;
  BasicParams basic{0.0, 0.0};
  Vec3 translation;
  Vec3 euler;
  Vec3 scale{1.0, 1.0, 1.0};
  Mat3 rotation;
  Mat3 to_unit;  // S^-1 R^T
  double scale_correction = 1.0;
  int min_scale_axis = 0;

  // spline
  SplineKind curve = SplineKind::CubicBezier;
  std::array<Vec3, 4> ctrl{};
  int n_ctrl = 0;
  double r_a = 0.0, r_b = 0.0;
  std::vector<Vec3> vertices;  // C(i/K)
  Vec3 bound_center;
  double bound_radius = 0.0;  // covers the curve plus the largest radius
};

struct PreparedField {
  std::vector<PreparedStroke> strokes;
  RegionConfig region;
  Rgb background;
  int segments = kDefaultSegments;
  bool cull = true;  // only honored for overlay composition
  bool exact_spline_t = true;  // include the sensitivity of t* in spline gradients
};

PreparedField prepare_field(const StrokeField& field);

/// Gradient of a scalar loss with respect to the constrained quantities of one
/// stroke. Rotation is accumulated as Z = sum w q u^T and contracted with dR
/// when the gradient is read out.
struct StrokeGrad {
  Vec3 translation;
  Mat3 rotation_z = Mat3::zero();
  Vec3 scale;  // per axis; the delta path lands on the smallest axis
  BasicParams basic{0.0, 0.0};
  std::array<Vec3, 4> ctrl{};
  double r_a = 0.0, r_b = 0.0;
  Rgb color;
  double density = 0.0;

  void add(const StrokeGrad& o);
  /// d/d(euler) from rotation_z.
  Vec3 euler(const PreparedStroke& s) const;
};

/// Sparse error-grid gradient in insertion order.
using GridGrad = std::vector<std::pair<std::uint32_t, double>>;

struct RayOutput {
  Rgb color;
  double opacity = 0.0;
  double error = 0.0;  // E(r), 0 without a grid
  bool hit = false;    // ray overlapped the clip box
};

/// Sample placement along a clipped ray.
struct RaySamples {
  std::vector<double> t;
  std::vector<double> dt;
};

/// n stratified samples over [t_near, t_far]; u in [0,1) per stratum from `seed`
/// (0.5 without jitter). dt is the stratum width.
void stratified_samples(double t_near, double t_far, int n, std::uint64_t seed, bool jitter, RaySamples& out);

/// Sorted samples with dt taken from midpoint boundaries clamped to [t_near, t_far].
void midpoint_intervals(double t_near, double t_far, RaySamples& samples);

/// Deterministic counter-based uniform stream.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

class RayWorkspace {
 public:
  /// Forward pass over the given samples. `ray` must already be clipped.
  RayOutput forward(const PreparedField& field, const ErrorGrid* grid, const Ray& ray, const RaySamples& samples);

  /// Backpropagates dL/dC, dL/dO, dL/dE plus a per-sample weight on e(x_k)
  /// (the error regularizer) through the last forward call.
  void backward(const Rgb& g_color, double g_opacity, double g_error, double g_error_sample,
                std::span<StrokeGrad> stroke_grads, GridGrad* grid_grad);

  /// Per-sample compositing weights T_k (1 - exp(-sigma_k dt_k)) of the last forward.
  const std::vector<double>& weights() const { return w_; }

  /// e(x_k) per sample of the last forward (empty without a grid).
  const std::vector<double>& sample_errors() const { return err_; }
  std::size_t sample_count() const { return n_; }

  /// Smallest |sdf| seen per stroke over the samples of the last forward.
  double min_abs_sdf(std::size_t stroke) const { return min_abs_sdf_[stroke]; }
  /// Max composition: smallest gap, in sdf units, between this stroke and the
  /// runner-up whenever it was one of the two leading strokes.
  double min_argmax_margin(std::size_t stroke) const { return min_margin_[stroke]; }

 private:
  void eval_primitive(std::size_t i, const PreparedStroke& s);
  void eval_spline(std::size_t i, const PreparedStroke& s);
  void compose(std::size_t k, double& sigma, Rgb& color);
  void compose_backward(std::size_t k, double g_sigma, const Rgb& g_color, std::span<StrokeGrad> grads);
  void geometry_backward(std::size_t i, const PreparedStroke& s, StrokeGrad& g);

  const PreparedField* field_ = nullptr;
  const ErrorGrid* grid_ = nullptr;
  Ray ray_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<double> t_, dt_, dscene_;
  std::vector<Vec3> x_;
  // per stroke
  std::vector<std::size_t> k0_, k1_;
  std::vector<double> alpha_, dads_, sdf_, delta_, tstar_, galpha_;  // [stroke * n + k]
  std::vector<unsigned char> delta_free_;  // delta unclamped, so it varies with scale
  std::vector<double> min_abs_sdf_;
  std::vector<double> min_margin_;
  // per sample
  std::vector<double> sigma_, trans_, w_, err_;
  std::vector<Rgb> color_;
  std::vector<std::size_t> active_;  // scratch
  std::vector<double> pre_sigma_, pre_cov_;
  std::vector<Rgb> pre_color_;
  double e_sum_ = 0.0;
  RayOutput out_;
  // SoA scratch
  std::vector<double> sx_, sy_, sz_, s0_, s1_, s2_, s3_, s4_, s5_, s6_;
};

/// Runs `fn(task)` for task in [0, n) on up to `threads` workers (0: hardware
/// count, overridable with STROKEFIELD_THREADS). Tasks must write disjoint outputs.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn);

int resolve_threads(int requested);

}  // namespace strokefield

#include "strokefield/parallel.inl"
