// SPDX-License-Identifier: Apache-2.0
#include "strokefield/spline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "strokefield/errors.hpp"

namespace strokefield {

std::optional<SplineKind> spline_kind_from_name(std::string_view name) {
  for (SplineKind k : kAllSplineKinds)
    if (spline_name(k) == name) return k;
  return std::nullopt;
}

void SplineStroke::validate() const {
  if (static_cast<int>(control_points.size()) != control_count(kind))
    throw ParameterShapeError(std::string(spline_name(kind)) + " expects " +
                              std::to_string(control_count(kind)) + " control points");
  if (!(r_a > 0.0 && r_b > 0.0)) throw DomainError("spline radii must be positive");
  if (!(density > 0.0)) throw DomainError("stroke density must be positive");
  for (int c = 0; c < 3; ++c)
    if (!(color[c] >= 0.0 && color[c] <= 1.0)) throw DomainError("stroke color must lie in [0,1]");
}

std::array<double, 4> spline_basis(SplineKind kind, double t) {
  const double u = 1.0 - t;
  switch (kind) {
    case SplineKind::QuadraticBezier: return {u * u, 2.0 * u * t, t * t, 0.0};
    case SplineKind::CubicBezier: return {u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t};
    case SplineKind::CatmullRom: {
      const double t2 = t * t, t3 = t2 * t;
      return {0.5 * (-t + 2.0 * t2 - t3), 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
              0.5 * (t + 4.0 * t2 - 3.0 * t3), 0.5 * (-t2 + t3)};
    }
  }
  return {0, 0, 0, 0};
}

std::array<double, 4> spline_basis_derivative(SplineKind kind, double t) {
  const double u = 1.0 - t;
  switch (kind) {
    case SplineKind::QuadraticBezier: return {-2.0 * u, 2.0 - 4.0 * t, 2.0 * t, 0.0};
    case SplineKind::CubicBezier:
      return {-3.0 * u * u, 3.0 * u * u - 6.0 * u * t, 6.0 * u * t - 3.0 * t * t, 3.0 * t * t};
    case SplineKind::CatmullRom: {
      const double t2 = t * t;
      return {0.5 * (-1.0 + 4.0 * t - 3.0 * t2), 0.5 * (-10.0 * t + 9.0 * t2), 0.5 * (1.0 + 8.0 * t - 9.0 * t2),
              0.5 * (-2.0 * t + 3.0 * t2)};
    }
  }
  return {0, 0, 0, 0};
}

namespace {

Vec3 eval_unchecked(SplineKind kind, std::span<const Vec3> ctrl, double t) {
  const auto w = spline_basis(kind, t);
  Vec3 r;
  for (std::size_t i = 0; i < ctrl.size(); ++i) r += ctrl[i] * w[i];
  return r;
}

void check_count(SplineKind kind, std::span<const Vec3> ctrl) {
  if (static_cast<int>(ctrl.size()) != control_count(kind))
    throw ParameterShapeError(std::string(spline_name(kind)) + " expects " +
                              std::to_string(control_count(kind)) + " control points");
}

}  // namespace

Vec3 eval_spline(SplineKind kind, std::span<const Vec3> ctrl, double t) {
  check_count(kind, ctrl);
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("spline parameter must lie in [0,1]");
  return eval_unchecked(kind, ctrl, t);
}

double radius_at(double t, double r_a, double r_b) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("spline parameter must lie in [0,1]");
  return r_a * (1.0 - t) + r_b * t;
}

double nearest_t_polyline(std::span<const Vec3> vertices, const Vec3& p, double* distance) {
  const int segments = static_cast<int>(vertices.size()) - 1;
  double t_star = 0.0;
  double d_min = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= segments; ++i) {
    const Vec3& a = vertices[i - 1];
    const Vec3& b = vertices[i];
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    const double tp = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const double d = norm(p - (a + ab * tp));
    if (d < d_min) {
      d_min = d;
      const double t0 = static_cast<double>(i - 1) / segments;
      const double t1 = static_cast<double>(i) / segments;
      t_star = t0 + (t1 - t0) * tp;
    }
  }
  if (distance) *distance = d_min;
  return t_star;
}

double nearest_t(SplineKind kind, std::span<const Vec3> ctrl, int segments, const Vec3& p) {
  check_count(kind, ctrl);
  if (segments < 1) throw DomainError("segment count must be at least 1");
  std::vector<Vec3> verts(segments + 1);
  for (int i = 0; i <= segments; ++i)
    verts[i] = eval_unchecked(kind, ctrl, static_cast<double>(i) / segments);
  return nearest_t_polyline(verts, p);
}

double curve_sdf(const SplineStroke& stroke, const Vec3& p, int segments) {
  const double t = nearest_t(stroke.kind, stroke.control_points, segments, p);
  const Vec3 c = eval_unchecked(stroke.kind, stroke.control_points, t);
  return norm(p - c) - (stroke.r_a * (1.0 - t) + stroke.r_b * t);
}

std::vector<Vec3> bezier_hull(SplineKind kind, std::span<const Vec3> ctrl) {
  check_count(kind, ctrl);
  if (kind != SplineKind::CatmullRom) return {ctrl.begin(), ctrl.end()};
  return {ctrl[1], ctrl[1] + (ctrl[2] - ctrl[0]) * (1.0 / 6.0), ctrl[2] - (ctrl[3] - ctrl[1]) * (1.0 / 6.0),
          ctrl[2]};
}

}  // namespace strokefield
