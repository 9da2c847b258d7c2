// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "strokefield/error_field.hpp"
#include "strokefield/field.hpp"

namespace strokefield {

/// How a raw (unconstrained) parameter maps to the stroke quantity.
enum class Reparam : std::uint8_t {
  Identity,  // x
  Positive,  // softplus(x) + min_positive
  Unit,      // logistic(x)
  Density,   // density_scale * softplus(x)
};

struct ReparamConfig {
  double density_scale = 10.0;
  double min_positive = 1e-3;
};

struct ParamSlice {
  std::string name;  // e.g. "stroke3.scale", "errorgrid"
  int stroke = -1;   // -1 for the error grid
  std::size_t offset = 0;
  std::size_t size = 0;
  Reparam reparam = Reparam::Identity;
};

/// Flat raw parameters of an error grid followed by every stroke, in order.
/// Per primitive: translation, rotation (if used), scale (1 or 3), basic,
/// color, density. Per spline: control points, r_a, r_b, color, density.
struct ParamVector {
  std::vector<double> values;
  std::vector<ParamSlice> slices;
  std::vector<std::size_t> stroke_first_slice;  // index into slices per stroke
  std::size_t grid_offset = 0;
  std::size_t grid_size = 0;

  std::size_t size() const { return values.size(); }
  /// Slice containing flat index `i`.
  const ParamSlice& slice_of(std::size_t i) const;
};

double inverse_softplus(double y);
double logit(double y);

double apply_reparam(Reparam r, double raw, const ReparamConfig& cfg);
/// d(constrained)/d(raw)
double reparam_derivative(Reparam r, double raw, const ReparamConfig& cfg);
double invert_reparam(Reparam r, double value, const ReparamConfig& cfg);

ParamVector encode_params(const StrokeField& field, const ErrorGrid* grid, const ReparamConfig& cfg = {});

/// Writes the constrained values into `field` (whose stroke kinds must match the
/// layout) and the grid raw values into `grid` when non-null.
void decode_params(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const ReparamConfig& cfg = {});

/// Layout only, for a field with the given stroke kinds; values left zero.
ParamVector param_layout(const StrokeField& field, std::size_t grid_size);

}  // namespace strokefield
