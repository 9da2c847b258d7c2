// SPDX-License-Identifier: Apache-2.0
#include "strokefield/stroke_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "strokefield/errors.hpp"

namespace strokefield {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kInvSqrt3 = 0.5773502691896258;
constexpr double kHalfSqrt3 = 0.8660254037844386;
constexpr double kSqrt2 = 1.4142135623730951;

inline double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

double cube_sdf(const Vec3& p) {
  const Vec3 q{std::abs(p.x) - 1.0, std::abs(p.y) - 1.0, std::abs(p.z) - 1.0};
  const double inside = std::min(std::max({q.x, q.y, q.z}), 0.0);
  const Vec3 qp{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
  return inside + norm(qp);
}

SdfGrad cube_sdf_grad(const Vec3& p) {
  SdfGrad g;
  const Vec3 q{std::abs(p.x) - 1.0, std::abs(p.y) - 1.0, std::abs(p.z) - 1.0};
  const double mq = std::max({q.x, q.y, q.z});
  if (mq > 0.0) {
    const Vec3 qp{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
    const double n = norm(qp);
    g.value = n;
    g.dp = {sgn(p.x) * qp.x / n, sgn(p.y) * qp.y / n, sgn(p.z) * qp.z / n};
  } else {
    g.value = mq;
    const int a = (q.x >= q.y && q.x >= q.z) ? 0 : (q.y >= q.z ? 1 : 2);
    g.dp[a] = sgn(p[a]);
  }
  return g;
}

double line_half_length(double h) { return std::max(h, kMinLineHalfLength); }

}  // namespace

std::optional<PrimitiveKind> primitive_kind_from_name(std::string_view name) {
  for (PrimitiveKind k : kAllPrimitiveKinds)
    if (traits(k).name == name) return k;
  return std::nullopt;
}

double base_sdf(BaseShape base, const Vec3& p, const BasicParams& basic) {
  switch (base) {
    case BaseShape::Sphere: return norm(p) - 1.0;
    case BaseShape::Cube: return cube_sdf(p);
    case BaseShape::RoundCube: return cube_sdf(p) - basic[0];
    case BaseShape::Tetrahedron: {
      // Printed form: both terms use |px + py|.
      const double a = std::abs(p.x + p.y);
      return (std::max(a - p.z, a + p.z) - 1.0) / kSqrt3;
    }
    case BaseShape::Octahedron:
      return (std::abs(p.x) + std::abs(p.y) + std::abs(p.z) - 1.0) / kSqrt3;
    case BaseShape::Triprism: {
      const double h = basic[0];
      return std::max(std::abs(p.y) - h,
                      std::max(std::abs(p.x) * kHalfSqrt3 + p.z * 0.5, -p.z) - 0.5);
    }
    case BaseShape::Line: {
      const double h = line_half_length(basic[0]);
      const double r = basic[1];
      const Vec3 q{p.x, p.y - std::clamp(p.y, -h, h), p.z};
      const double taper = std::clamp(0.5 * (p.y + h) / h, 0.0, 1.0);
      return norm(q) - r * taper;
    }
  }
  return 0.0;
}

SdfGrad base_sdf_grad(BaseShape base, const Vec3& p, const BasicParams& basic) {
  SdfGrad g;
  switch (base) {
    case BaseShape::Sphere: {
      const double n = norm(p);
      g.value = n - 1.0;
      if (n > 0.0) g.dp = p * (1.0 / n);
      return g;
    }
    case BaseShape::Cube: return cube_sdf_grad(p);
    case BaseShape::RoundCube: {
      g = cube_sdf_grad(p);
      g.value -= basic[0];
      g.dbasic[0] = -1.0;
      return g;
    }
    case BaseShape::Tetrahedron: {
      const double s = p.x + p.y;
      const double a = std::abs(s);
      const double v1 = a - p.z, v2 = a + p.z;
      const double sa = sgn(s);
      if (v1 > v2) {
        g.value = (v1 - 1.0) * kInvSqrt3;
        g.dp = Vec3{sa, sa, -1.0} * kInvSqrt3;
      } else {
        g.value = (v2 - 1.0) * kInvSqrt3;
        g.dp = Vec3{sa, sa, 1.0} * kInvSqrt3;
      }
      return g;
    }
    case BaseShape::Octahedron:
      g.value = (std::abs(p.x) + std::abs(p.y) + std::abs(p.z) - 1.0) * kInvSqrt3;
      g.dp = Vec3{sgn(p.x), sgn(p.y), sgn(p.z)} * kInvSqrt3;
      return g;
    case BaseShape::Triprism: {
      const double h = basic[0];
      const double v1 = std::abs(p.y) - h;
      const double m1 = std::abs(p.x) * kHalfSqrt3 + p.z * 0.5;
      const double m2 = -p.z;
      const double v2 = std::max(m1, m2) - 0.5;
      if (v1 >= v2) {
        g.value = v1;
        g.dp = {0.0, sgn(p.y), 0.0};
        g.dbasic[0] = -1.0;
      } else if (m1 >= m2) {
        g.value = v2;
        g.dp = {sgn(p.x) * kHalfSqrt3, 0.0, 0.5};
      } else {
        g.value = v2;
        g.dp = {0.0, 0.0, -1.0};
      }
      return g;
    }
    case BaseShape::Line: {
      const bool clamped_h = basic[0] < kMinLineHalfLength;
      const double h = line_half_length(basic[0]);
      const double r = basic[1];
      const Vec3 q{p.x, p.y - std::clamp(p.y, -h, h), p.z};
      const double d = norm(q);
      const double u = 0.5 * (p.y + h) / h;
      const double taper = std::clamp(u, 0.0, 1.0);
      g.value = d - r * taper;
      double dd_dh = 0.0;
      if (d > 0.0) {
        g.dp = q * (1.0 / d);
        if (p.y > h) dd_dh = -q.y / d;
        else if (p.y < -h) dd_dh = q.y / d;
      }
      double dtaper_dy = 0.0, dtaper_dh = 0.0;
      if (u > 0.0 && u < 1.0) {
        dtaper_dy = 0.5 / h;
        dtaper_dh = -0.5 * p.y / (h * h);
      }
      g.dp.y -= r * dtaper_dy;
      g.dbasic[0] = clamped_h ? 0.0 : dd_dh - r * dtaper_dh;
      g.dbasic[1] = -taper;
      return g;
    }
  }
  return g;
}

double base_cull_radius(BaseShape base, const BasicParams& basic, double margin) {
  switch (base) {
    case BaseShape::Sphere: return 1.0 + margin;
    case BaseShape::Cube: return kSqrt3 + margin;
    case BaseShape::RoundCube: return std::max(0.0, kSqrt3 + basic[0] + margin);
    case BaseShape::Octahedron: return 1.0 + kSqrt3 * margin;
    case BaseShape::Triprism:
      // max(|py| - h, 0.5 |p_xz| - 0.5) bounds the prism from below.
      return std::max({0.0, kSqrt2 * (basic[0] + margin), 2.0 * kSqrt2 * (0.5 + margin)});
    case BaseShape::Line:
      return line_half_length(basic[0]) + std::max(basic[1], 0.0) + margin;
    case BaseShape::Tetrahedron: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

double unit_sdf(PrimitiveKind kind, const Vec3& p, std::span<const double> basic) {
  const KindTraits tr = traits(kind);
  if (static_cast<int>(basic.size()) != tr.basic_count)
    throw ParameterShapeError(std::string(tr.name) + " expects " + std::to_string(tr.basic_count) +
                              " basic parameters, got " + std::to_string(basic.size()));
  BasicParams b{0.0, 0.0};
  std::copy(basic.begin(), basic.end(), b.begin());
  return base_sdf(tr.base, p, b);
}

Mat3 rotation_matrix(const Vec3& e) {
  const double cx = std::cos(e.x), sx = std::sin(e.x);
  const double cy = std::cos(e.y), sy = std::sin(e.y);
  const double cz = std::cos(e.z), sz = std::sin(e.z);
  Mat3 rx, ry, rz;
  rx.m = {1, 0, 0, 0, cx, -sx, 0, sx, cx};
  ry.m = {cy, 0, sy, 0, 1, 0, -sy, 0, cy};
  rz.m = {cz, -sz, 0, sz, cz, 0, 0, 0, 1};
  return rz * ry * rx;
}

std::array<Mat3, 3> rotation_matrix_derivatives(const Vec3& e) {
  const double cx = std::cos(e.x), sx = std::sin(e.x);
  const double cy = std::cos(e.y), sy = std::sin(e.y);
  const double cz = std::cos(e.z), sz = std::sin(e.z);
  Mat3 rx, ry, rz, drx, dry, drz;
  rx.m = {1, 0, 0, 0, cx, -sx, 0, sx, cx};
  ry.m = {cy, 0, sy, 0, 1, 0, -sy, 0, cy};
  rz.m = {cz, -sz, 0, sz, cz, 0, 0, 0, 1};
  drx.m = {0, 0, 0, 0, -sx, -cx, 0, cx, -sx};
  dry.m = {-sy, 0, cy, 0, 0, 0, -cy, 0, -sy};
  drz.m = {-sz, -cz, 0, cz, -sz, 0, 0, 0, 0};
  return {rz * ry * drx, rz * dry * rx, drz * ry * rx};
}

AffinePair compose_transform(const Vec3& t, const Vec3& r, const Vec3& s) {
  if (!(s.x > 0.0 && s.y > 0.0 && s.z > 0.0))
    throw DomainError("scale components must be strictly positive");
  const Mat3 rot = rotation_matrix(r);
  AffinePair out;
  // forward = T R S
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out.forward(i, j) = rot(i, j) * s[j];
    out.forward(i, 3) = t[i];
  }
  // inverse = S^-1 R^T T^-1
  const Mat3 rt = rot.transposed();
  for (int i = 0; i < 3; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      out.inverse(i, j) = rt(i, j) / s[i];
      acc += out.inverse(i, j) * t[j];
    }
    out.inverse(i, 3) = -acc;
  }
  return out;
}

bool invert(const Mat4& a, Mat4& out, double singular_eps) {
  const auto& m = a.m;
  std::array<double, 16> inv{};
  inv[0] = m[5] * m[10] * m[15] - m[5] * m[11] * m[14] - m[9] * m[6] * m[15] + m[9] * m[7] * m[14] +
           m[13] * m[6] * m[11] - m[13] * m[7] * m[10];
  inv[4] = -m[4] * m[10] * m[15] + m[4] * m[11] * m[14] + m[8] * m[6] * m[15] - m[8] * m[7] * m[14] -
           m[12] * m[6] * m[11] + m[12] * m[7] * m[10];
  inv[8] = m[4] * m[9] * m[15] - m[4] * m[11] * m[13] - m[8] * m[5] * m[15] + m[8] * m[7] * m[13] +
           m[12] * m[5] * m[11] - m[12] * m[7] * m[9];
  inv[12] = -m[4] * m[9] * m[14] + m[4] * m[10] * m[13] + m[8] * m[5] * m[14] - m[8] * m[6] * m[13] -
            m[12] * m[5] * m[10] + m[12] * m[6] * m[9];
  inv[1] = -m[1] * m[10] * m[15] + m[1] * m[11] * m[14] + m[9] * m[2] * m[15] - m[9] * m[3] * m[14] -
           m[13] * m[2] * m[11] + m[13] * m[3] * m[10];
  inv[5] = m[0] * m[10] * m[15] - m[0] * m[11] * m[14] - m[8] * m[2] * m[15] + m[8] * m[3] * m[14] +
           m[12] * m[2] * m[11] - m[12] * m[3] * m[10];
  inv[9] = -m[0] * m[9] * m[15] + m[0] * m[11] * m[13] + m[8] * m[1] * m[15] - m[8] * m[3] * m[13] -
           m[12] * m[1] * m[11] + m[12] * m[3] * m[9];
  inv[13] = m[0] * m[9] * m[14] - m[0] * m[10] * m[13] - m[8] * m[1] * m[14] + m[8] * m[2] * m[13] +
            m[12] * m[1] * m[10] - m[12] * m[2] * m[9];
  inv[2] = m[1] * m[6] * m[15] - m[1] * m[7] * m[14] - m[5] * m[2] * m[15] + m[5] * m[3] * m[14] +
           m[13] * m[2] * m[7] - m[13] * m[3] * m[6];
  inv[6] = -m[0] * m[6] * m[15] + m[0] * m[7] * m[14] + m[4] * m[2] * m[15] - m[4] * m[3] * m[14] -
           m[12] * m[2] * m[7] + m[12] * m[3] * m[6];
  inv[10] = m[0] * m[5] * m[15] - m[0] * m[7] * m[13] - m[4] * m[1] * m[15] + m[4] * m[3] * m[13] +
            m[12] * m[1] * m[7] - m[12] * m[3] * m[5];
  inv[14] = -m[0] * m[5] * m[14] + m[0] * m[6] * m[13] + m[4] * m[1] * m[14] - m[4] * m[2] * m[13] -
            m[12] * m[1] * m[6] + m[12] * m[2] * m[5];
  inv[3] = -m[1] * m[6] * m[11] + m[1] * m[7] * m[10] + m[5] * m[2] * m[11] - m[5] * m[3] * m[10] -
           m[9] * m[2] * m[7] + m[9] * m[3] * m[6];
  inv[7] = m[0] * m[6] * m[11] - m[0] * m[7] * m[10] - m[4] * m[2] * m[11] + m[4] * m[3] * m[10] +
           m[8] * m[2] * m[7] - m[8] * m[3] * m[6];
  inv[11] = -m[0] * m[5] * m[11] + m[0] * m[7] * m[9] + m[4] * m[1] * m[11] - m[4] * m[3] * m[9] -
            m[8] * m[1] * m[7] + m[8] * m[3] * m[5];
  inv[15] = m[0] * m[5] * m[10] - m[0] * m[6] * m[9] - m[4] * m[1] * m[10] + m[4] * m[2] * m[9] +
            m[8] * m[1] * m[6] - m[8] * m[2] * m[5];
  const double det = m[0] * inv[0] + m[1] * inv[4] + m[2] * inv[8] + m[3] * inv[12];
  if (!std::isfinite(det) || std::abs(det) < singular_eps) return false;
  for (int i = 0; i < 16; ++i) out.m[i] = inv[i] / det;
  return true;
}

void PrimitiveStroke::validate() const {
  const KindTraits tr = traits(kind);
  if (static_cast<int>(basic.size()) != tr.basic_count)
    throw ParameterShapeError(std::string(tr.name) + " expects " + std::to_string(tr.basic_count) +
                              " basic parameters, got " + std::to_string(basic.size()));
  const Transform t = effective_transform();
  if (!(t.scale.x > 0.0 && t.scale.y > 0.0 && t.scale.z > 0.0))
    throw DomainError("stroke scale must be strictly positive");
  if (!(density > 0.0)) throw DomainError("stroke density must be positive");
  for (int c = 0; c < 3; ++c)
    if (!(color[c] >= 0.0 && color[c] <= 1.0)) throw DomainError("stroke color must lie in [0,1]");
}

Transform PrimitiveStroke::effective_transform() const {
  const KindTraits tr = traits(kind);
  Transform t = transform;
  if (!tr.rotation) t.rotation = {};
  if (tr.uniform_scale) t.scale = {transform.scale.x, transform.scale.x, transform.scale.x};
  return t;
}

BasicParams PrimitiveStroke::basic_array() const {
  BasicParams b{0.0, 0.0};
  for (std::size_t i = 0; i < basic.size() && i < 2; ++i) b[i] = basic[i];
  return b;
}

PrimitiveSdf primitive_sdf(const PrimitiveStroke& stroke, const Vec3& p) {
  const Transform t = stroke.effective_transform();
  const AffinePair m = compose_transform(t.translation, t.rotation, t.scale);
  const Vec3 unit_p = m.inverse.transform_point(p);
  const double value = unit_sdf(stroke.kind, unit_p, stroke.basic);
  return {value, std::min({t.scale.x, t.scale.y, t.scale.z})};
}

}  // namespace strokefield
