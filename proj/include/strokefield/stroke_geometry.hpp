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

/// Unit-space base shapes. Several stroke kinds share one base shape and differ
/// only in which transform components they expose.
enum class BaseShape : std::uint8_t { Sphere, Cube, RoundCube, Line, Triprism, Octahedron, Tetrahedron };

enum class PrimitiveKind : std::uint8_t {
  Sphere,
  Ellipsoid,
  AxisAlignedCube,
  OrientedCube,
  AxisAlignedBox,
  OrientedBox,
  RoundCube,
  RoundBox,
  Line,
  Triprism,
  Octahedron,
  Tetrahedron,
};

inline constexpr std::array<PrimitiveKind, 12> kAllPrimitiveKinds = {
    PrimitiveKind::Sphere,         PrimitiveKind::Ellipsoid,  PrimitiveKind::AxisAlignedCube,
    PrimitiveKind::OrientedCube,   PrimitiveKind::AxisAlignedBox, PrimitiveKind::OrientedBox,
    PrimitiveKind::RoundCube,      PrimitiveKind::RoundBox,   PrimitiveKind::Line,
    PrimitiveKind::Triprism,       PrimitiveKind::Octahedron, PrimitiveKind::Tetrahedron,
};

/// Per-kind catalog entry: base shape, basic parameter count and which
/// transform components are used (translation is always used).
struct KindTraits {
  std::string_view name;
  BaseShape base;
  int basic_count;
  bool rotation;
  bool uniform_scale;  // false: anisotropic 3-vector scale
};

constexpr KindTraits traits(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Sphere: return {"sphere", BaseShape::Sphere, 0, false, true};
    case PrimitiveKind::Ellipsoid: return {"ellipsoid", BaseShape::Sphere, 0, true, false};
    case PrimitiveKind::AxisAlignedCube: return {"aa_cube", BaseShape::Cube, 0, false, true};
    case PrimitiveKind::OrientedCube: return {"oriented_cube", BaseShape::Cube, 0, true, true};
    case PrimitiveKind::AxisAlignedBox: return {"aa_box", BaseShape::Cube, 0, false, false};
    case PrimitiveKind::OrientedBox: return {"oriented_box", BaseShape::Cube, 0, true, false};
    case PrimitiveKind::RoundCube: return {"round_cube", BaseShape::RoundCube, 1, true, true};
    case PrimitiveKind::RoundBox: return {"round_box", BaseShape::RoundCube, 1, true, false};
    case PrimitiveKind::Line: return {"line", BaseShape::Line, 2, true, true};
    case PrimitiveKind::Triprism: return {"triprism", BaseShape::Triprism, 1, true, true};
    case PrimitiveKind::Octahedron: return {"octahedron", BaseShape::Octahedron, 0, true, true};
    case PrimitiveKind::Tetrahedron: return {"tetrahedron", BaseShape::Tetrahedron, 0, true, true};
  }
  return {"?", BaseShape::Sphere, 0, false, true};
}

constexpr int basic_count(BaseShape base) {
  switch (base) {
    case BaseShape::RoundCube:
    case BaseShape::Triprism: return 1;
    case BaseShape::Line: return 2;
    default: return 0;
  }
}

std::optional<PrimitiveKind> primitive_kind_from_name(std::string_view name);

/// Minimum half-length of the capsule line segment.
inline constexpr double kMinLineHalfLength = 1e-4;

/// Basic params for a unit shape; at most two scalars.
using BasicParams = std::array<double, 2>;

/// Closed-form unit SDF of a primitive kind. Throws ParameterShapeError when
/// `basic` does not have the kind's parameter count.
double unit_sdf(PrimitiveKind kind, const Vec3& p, std::span<const double> basic);

/// Same as unit_sdf but on the base shape, no length check.
double base_sdf(BaseShape base, const Vec3& p, const BasicParams& basic);

/// Value, point gradient and basic-parameter gradient of a base unit SDF.
struct SdfGrad {
  double value = 0.0;
  Vec3 dp;
  BasicParams dbasic{0.0, 0.0};
};
SdfGrad base_sdf_grad(BaseShape base, const Vec3& p, const BasicParams& basic);

/// Smallest radius R such that base_sdf(p) >= margin whenever |p| >= R;
/// infinity for unbounded shapes.
double base_cull_radius(BaseShape base, const BasicParams& basic, double margin);

/// Rigid + scale transform parameters. Uniform-scale kinds keep all three scale
/// components equal; kinds without rotation ignore `rotation`.
struct Transform {
  Vec3 translation;
  Vec3 rotation;  // Euler angles, radians
  Vec3 scale{1.0, 1.0, 1.0};
};

struct AffinePair {
  Mat4 forward;  // unit -> scene
  Mat4 inverse;  // scene -> unit
};

/// R = Rz * Ry * Rx.
Mat3 rotation_matrix(const Vec3& euler);

/// Partial derivatives of rotation_matrix with respect to each Euler angle.
std::array<Mat3, 3> rotation_matrix_derivatives(const Vec3& euler);

/// M = T * Rz * Ry * Rx * S and its inverse. Throws DomainError for
/// non-positive scale.
AffinePair compose_transform(const Vec3& t, const Vec3& r, const Vec3& s);

struct PrimitiveStroke {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  std::vector<double> basic;
  Transform transform;
  Rgb color{0.5, 0.5, 0.5};
  double density = 1.0;

  /// Throws ParameterShapeError / DomainError when the stroke violates its invariants.
  void validate() const;

  /// Transform with unused components neutralized (no rotation, uniform scale collapsed).
  Transform effective_transform() const;

  BasicParams basic_array() const;
};

struct PrimitiveSdf {
  double value;             // unit-space signed distance
  double scale_correction;  // smallest scale component
};

PrimitiveSdf primitive_sdf(const PrimitiveStroke& stroke, const Vec3& p);

}  // namespace strokefield
