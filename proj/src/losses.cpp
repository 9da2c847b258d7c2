// SPDX-License-Identifier: Apache-2.0
#include "strokefield/losses.hpp"

#include <cmath>

#include "strokefield/errors.hpp"

namespace strokefield {

double charbonnier(const Rgb& a, const Rgb& b, double eps) {
  if (!(eps > 0.0)) throw DomainError("Charbonnier epsilon must be positive");
  const Rgb d = a - b;
  return std::sqrt(dot(d, d) + eps);
}

double mask_loss(double opacity, double gt_mask, double eps) {
  if (!(eps > 0.0)) throw DomainError("Charbonnier epsilon must be positive");
  const double d = opacity - gt_mask;
  return std::sqrt(d * d + eps);
}

double density_reg(std::span<const Stroke> strokes) {
  double s = 0.0;
  for (const Stroke& st : strokes) s += std::abs(stroke_density(st));
  return s;
}

LossBreakdown total_loss(const LossTerms& terms, const LossWeights& w, bool has_mask) {
  LossBreakdown b;
  b.terms = terms;
  b.weighted.color = w.color * terms.color;
  b.weighted.mask = has_mask ? w.mask * terms.mask : 0.0;
  b.weighted.den_reg = w.den_reg * terms.den_reg;
  b.weighted.err = w.err * terms.err;
  b.weighted.err_reg = w.err_reg * terms.err_reg;
  b.total = b.weighted.color + b.weighted.mask + b.weighted.den_reg + b.weighted.err + b.weighted.err_reg;
  return b;
}

}  // namespace strokefield
