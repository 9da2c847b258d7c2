// SPDX-License-Identifier: Apache-2.0
#include "strokefield/params.hpp"

#include <algorithm>
#include <cmath>

#include "strokefield/errors.hpp"

namespace strokefield {

double inverse_softplus(double y) {
  if (!(y > 0.0)) throw DomainError("inverse softplus needs a positive value");
  if (y > 30.0) return y;
  return y + std::log(-std::expm1(-y));
}

double logit(double y) {
  const double c = std::clamp(y, 1e-6, 1.0 - 1e-6);
  return std::log(c / (1.0 - c));
}

double apply_reparam(Reparam r, double raw, const ReparamConfig& cfg) {
  switch (r) {
    case Reparam::Identity: return raw;
    case Reparam::Positive: return softplus(raw) + cfg.min_positive;
    case Reparam::Unit: return logistic(raw);
    case Reparam::Density: return cfg.density_scale * softplus(raw);
  }
  return raw;
}

double reparam_derivative(Reparam r, double raw, const ReparamConfig& cfg) {
  switch (r) {
    case Reparam::Identity: return 1.0;
    case Reparam::Positive: return logistic(raw);
    case Reparam::Unit: {
      const double s = logistic(raw);
      return s * (1.0 - s);
    }
    case Reparam::Density: return cfg.density_scale * logistic(raw);
  }
  return 1.0;
}

double invert_reparam(Reparam r, double value, const ReparamConfig& cfg) {
  switch (r) {
    case Reparam::Identity: return value;
    case Reparam::Positive: return inverse_softplus(std::max(value - cfg.min_positive, 1e-12));
    case Reparam::Unit: return logit(value);
    case Reparam::Density: return inverse_softplus(std::max(value / cfg.density_scale, 1e-300));
  }
  return value;
}

const ParamSlice& ParamVector::slice_of(std::size_t i) const {
  auto it = std::upper_bound(slices.begin(), slices.end(), i,
                             [](std::size_t v, const ParamSlice& s) { return v < s.offset; });
  if (it == slices.begin()) throw DomainError("parameter index out of range");
  return *(it - 1);
}

namespace {

void add_slice(ParamVector& pv, std::string name, int stroke, std::size_t size, Reparam r) {
  if (size == 0) return;
  ParamSlice s{std::move(name), stroke, pv.values.size(), size, r};
  pv.values.resize(pv.values.size() + size, 0.0);
  pv.slices.push_back(std::move(s));
}

}  // namespace

ParamVector param_layout(const StrokeField& field, std::size_t grid_size) {
  ParamVector pv;
  pv.grid_offset = 0;
  pv.grid_size = grid_size;
  add_slice(pv, "errorgrid", -1, grid_size, Reparam::Identity);
  for (std::size_t i = 0; i < field.strokes.size(); ++i) {
    const int si = static_cast<int>(i);
    const std::string p = "stroke" + std::to_string(i) + ".";
    pv.stroke_first_slice.push_back(pv.slices.size());
    if (const auto* prim = std::get_if<PrimitiveStroke>(&field.strokes[i])) {
      const KindTraits tr = traits(prim->kind);
      add_slice(pv, p + "translation", si, 3, Reparam::Identity);
      if (tr.rotation) add_slice(pv, p + "rotation", si, 3, Reparam::Identity);
      add_slice(pv, p + "scale", si, tr.uniform_scale ? 1 : 3, Reparam::Positive);
      add_slice(pv, p + "basic", si, static_cast<std::size_t>(tr.basic_count), Reparam::Identity);
    } else {
      const auto& s = std::get<SplineStroke>(field.strokes[i]);
      add_slice(pv, p + "control_points", si, 3 * static_cast<std::size_t>(control_count(s.kind)),
                Reparam::Identity);
      add_slice(pv, p + "radii", si, 2, Reparam::Positive);
    }
    add_slice(pv, p + "color", si, 3, Reparam::Unit);
    add_slice(pv, p + "density", si, 1, Reparam::Density);
  }
  return pv;
}

ParamVector encode_params(const StrokeField& field, const ErrorGrid* grid, const ReparamConfig& cfg) {
  ParamVector pv = param_layout(field, grid ? grid->size() : 0);
  if (grid) std::copy(grid->raw().begin(), grid->raw().end(), pv.values.begin());
  for (std::size_t i = 0; i < field.strokes.size(); ++i) {
    std::vector<double> vals;
    if (const auto* prim = std::get_if<PrimitiveStroke>(&field.strokes[i])) {
      const KindTraits tr = traits(prim->kind);
      const Transform& t = prim->transform;
      for (int a = 0; a < 3; ++a) vals.push_back(t.translation[a]);
      if (tr.rotation)
        for (int a = 0; a < 3; ++a) vals.push_back(t.rotation[a]);
      for (int a = 0; a < (tr.uniform_scale ? 1 : 3); ++a) vals.push_back(t.scale[a]);
      if (static_cast<int>(prim->basic.size()) != tr.basic_count)
        throw ParameterShapeError(std::string(tr.name) + ": wrong basic parameter count");
      for (double b : prim->basic) vals.push_back(b);
      for (int a = 0; a < 3; ++a) vals.push_back(prim->color[a]);
      vals.push_back(prim->density);
    } else {
      const auto& s = std::get<SplineStroke>(field.strokes[i]);
      if (static_cast<int>(s.control_points.size()) != control_count(s.kind))
        throw ParameterShapeError(std::string(spline_name(s.kind)) + ": wrong control point count");
      for (const Vec3& c : s.control_points)
        for (int a = 0; a < 3; ++a) vals.push_back(c[a]);
      vals.push_back(s.r_a);
      vals.push_back(s.r_b);
      for (int a = 0; a < 3; ++a) vals.push_back(s.color[a]);
      vals.push_back(s.density);
    }
    std::size_t v = 0;
    const std::size_t end = i + 1 < field.strokes.size() ? pv.stroke_first_slice[i + 1] : pv.slices.size();
    for (std::size_t si = pv.stroke_first_slice[i]; si < end; ++si) {
      const ParamSlice& sl = pv.slices[si];
      for (std::size_t j = 0; j < sl.size; ++j, ++v) pv.values[sl.offset + j] = invert_reparam(sl.reparam, vals[v], cfg);
    }
  }
  return pv;
}

void decode_params(const ParamVector& pv, StrokeField& field, ErrorGrid* grid, const ReparamConfig& cfg) {
  if (pv.stroke_first_slice.size() != field.strokes.size())
    throw ParameterShapeError("parameter layout does not match the stroke field");
  if (grid) {
    if (grid->size() != pv.grid_size) throw ParameterShapeError("parameter layout does not match the error grid");
    std::copy(pv.values.begin() + static_cast<std::ptrdiff_t>(pv.grid_offset),
              pv.values.begin() + static_cast<std::ptrdiff_t>(pv.grid_offset + pv.grid_size), grid->raw().begin());
  }
  std::vector<double> vals;
  for (std::size_t i = 0; i < field.strokes.size(); ++i) {
    vals.clear();
    const std::size_t end = i + 1 < field.strokes.size() ? pv.stroke_first_slice[i + 1] : pv.slices.size();
    for (std::size_t si = pv.stroke_first_slice[i]; si < end; ++si) {
      const ParamSlice& sl = pv.slices[si];
      for (std::size_t j = 0; j < sl.size; ++j) vals.push_back(apply_reparam(sl.reparam, pv.values[sl.offset + j], cfg));
    }
    std::size_t v = 0;
    if (auto* prim = std::get_if<PrimitiveStroke>(&field.strokes[i])) {
      const KindTraits tr = traits(prim->kind);
      Transform& t = prim->transform;
      for (int a = 0; a < 3; ++a) t.translation[a] = vals[v++];
      if (tr.rotation)
        for (int a = 0; a < 3; ++a) t.rotation[a] = vals[v++];
      else
        t.rotation = {};
      if (tr.uniform_scale) {
        const double s = vals[v++];
        t.scale = {s, s, s};
      } else {
        for (int a = 0; a < 3; ++a) t.scale[a] = vals[v++];
      }
      prim->basic.resize(static_cast<std::size_t>(tr.basic_count));
      for (double& b : prim->basic) b = vals[v++];
      for (int a = 0; a < 3; ++a) prim->color[a] = vals[v++];
      prim->density = vals[v++];
    } else {
      auto& s = std::get<SplineStroke>(field.strokes[i]);
      s.control_points.resize(static_cast<std::size_t>(control_count(s.kind)));
      for (Vec3& c : s.control_points)
        for (int a = 0; a < 3; ++a) c[a] = vals[v++];
      s.r_a = vals[v++];
      s.r_b = vals[v++];
      for (int a = 0; a < 3; ++a) s.color[a] = vals[v++];
      s.density = vals[v++];
    }
  }
}

}  // namespace strokefield
