// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "strokefield/field.hpp"
#include "strokefield/vec.hpp"

namespace strokefield {

struct LossWeights {
  double color = 1.0;
  double mask = 0.02;
  double den_reg = 1e-4;
  double err = 0.1;
  double err_reg = 1e-3;
};

/// Unweighted loss terms of one batch.
struct LossTerms {
  double color = 0.0;    // mean Charbonnier color distance over rays
  double mask = 0.0;     // mean Charbonnier opacity distance over rays
  double den_reg = 0.0;  // sum of stroke densities
  double err = 0.0;      // mean asymmetric error-field loss over rays
  double err_reg = 0.0;  // mean e(x) over the batch samples
};

struct LossBreakdown {
  LossTerms terms;
  LossTerms weighted;
  double total = 0.0;
};

/// sqrt(|a - b|^2 + eps)
double charbonnier(const Rgb& a, const Rgb& b, double eps);

/// sqrt((opacity - mask)^2 + eps)
double mask_loss(double opacity, double gt_mask, double eps);

/// Sum of |density| over the strokes.
double density_reg(std::span<const Stroke> strokes);

/// Weighted sum; the mask term is dropped when `has_mask` is false.
LossBreakdown total_loss(const LossTerms& terms, const LossWeights& weights, bool has_mask);

}  // namespace strokefield
