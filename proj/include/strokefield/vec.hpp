// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>

namespace strokefield {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : a;
}

using Rgb = Vec3;

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 3 + c]; }

  static constexpr Mat3 zero() {
    Mat3 z;
    z.m.fill(0.0);
    return z;
  }
  static constexpr Mat3 diag(const Vec3& d) {
    Mat3 r = zero();
    r(0, 0) = d.x; r(1, 1) = d.y; r(2, 2) = d.z;
    return r;
  }

  constexpr Mat3 transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
  }

  friend constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r = zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r(i, j) += a(i, k) * b(k, j);
    return r;
  }
  friend constexpr Vec3 operator*(const Mat3& a, const Vec3& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
  }
};

/// Row-major 4x4 homogeneous matrix.
struct Mat4 {
  std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

  constexpr double operator()(int r, int c) const { return m[r * 4 + c]; }
  constexpr double& operator()(int r, int c) { return m[r * 4 + c]; }

  friend constexpr Mat4 operator*(const Mat4& a, const Mat4& b) {
    Mat4 r;
    r.m.fill(0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) r(i, j) += a(i, k) * b(k, j);
    return r;
  }

  constexpr std::array<double, 4> apply(const std::array<double, 4>& v) const {
    std::array<double, 4> r{};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) r[i] += (*this)(i, k) * v[k];
    return r;
  }
  constexpr Vec3 transform_point(const Vec3& p) const {
    const auto r = apply({p.x, p.y, p.z, 1.0});
    return {r[0], r[1], r[2]};
  }
  constexpr Vec3 transform_dir(const Vec3& d) const {
    const auto r = apply({d.x, d.y, d.z, 0.0});
    return {r[0], r[1], r[2]};
  }
  constexpr Mat3 linear() const {
    Mat3 l;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) l(r, c) = (*this)(r, c);
    return l;
  }
  constexpr Vec3 translation() const { return {(*this)(0, 3), (*this)(1, 3), (*this)(2, 3)}; }
};

/// Axis-aligned box.
struct Aabb {
  Vec3 lo{-1.0, -1.0, -1.0};
  Vec3 hi{1.0, 1.0, 1.0};

  constexpr bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z && p.z <= hi.z;
  }
  constexpr Vec3 extent() const { return hi - lo; }
  double diagonal() const { return norm(hi - lo); }
};

/// General 4x4 inverse by cofactor expansion. Returns false when singular.
bool invert(const Mat4& a, Mat4& out, double singular_eps = 1e-12);

}  // namespace strokefield
