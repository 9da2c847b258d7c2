// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "strokefield/vec.hpp"

namespace strokefield {

enum class SplineKind : std::uint8_t { QuadraticBezier, CubicBezier, CatmullRom };

inline constexpr std::array<SplineKind, 3> kAllSplineKinds = {
    SplineKind::QuadraticBezier, SplineKind::CubicBezier, SplineKind::CatmullRom};

constexpr int control_count(SplineKind kind) { return kind == SplineKind::QuadraticBezier ? 3 : 4; }

constexpr std::string_view spline_name(SplineKind kind) {
  switch (kind) {
    case SplineKind::QuadraticBezier: return "quadratic_bezier";
    case SplineKind::CubicBezier: return "cubic_bezier";
    case SplineKind::CatmullRom: return "catmull_rom";
  }
  return "?";
}

std::optional<SplineKind> spline_kind_from_name(std::string_view name);

/// Default number of polyline segments used for nearest-point search.
inline constexpr int kDefaultSegments = 32;

struct SplineStroke {
  SplineKind kind = SplineKind::CubicBezier;
  std::vector<Vec3> control_points;
  double r_a = 0.05;
  double r_b = 0.05;
  Rgb color{0.5, 0.5, 0.5};
  double density = 1.0;

  void validate() const;
};

/// Blending weights of the control points at parameter t (unused tail entries are zero).
std::array<double, 4> spline_basis(SplineKind kind, double t);

/// d/dt of spline_basis.
std::array<double, 4> spline_basis_derivative(SplineKind kind, double t);

/// Curve point at t in [0,1]; throws DomainError outside that range and
/// ParameterShapeError for a wrong control-point count.
Vec3 eval_spline(SplineKind kind, std::span<const Vec3> ctrl, double t);

double radius_at(double t, double r_a, double r_b);

/// Approximate parameter of the nearest curve point: the curve is cut into K
/// uniform-parameter segments and the clamped projection onto each segment is
/// tracked with a running minimum. Ties keep the earlier (smaller t) segment.
double nearest_t(SplineKind kind, std::span<const Vec3> ctrl, int segments, const Vec3& p);

/// Same search over precomputed polyline vertices C(i/K), i = 0..K.
/// Writes the polyline distance to `distance` when non-null.
double nearest_t_polyline(std::span<const Vec3> vertices, const Vec3& p, double* distance = nullptr);

/// |p - C(t*)| - r(t*).
double curve_sdf(const SplineStroke& stroke, const Vec3& p, int segments = kDefaultSegments);

/// Control polygon of an equivalent cubic/quadratic Bezier; its convex hull
/// contains the curve.
std::vector<Vec3> bezier_hull(SplineKind kind, std::span<const Vec3> ctrl);

}  // namespace strokefield
