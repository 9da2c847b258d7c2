// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "strokefield/error_field.hpp"
#include "strokefield/field.hpp"
#include "strokefield/losses.hpp"
#include "strokefield/params.hpp"

namespace strokefield {

struct RayBatch {
  std::vector<Ray> rays;  // camera rays; clipped to clip_box before sampling
  std::vector<Rgb> gt;
  std::vector<double> mask;  // empty: the dataset has no masks
  std::vector<std::uint64_t> seeds;  // stratified jitter seed per ray
  int n_samples = 64;
  bool jitter = true;
  Aabb clip_box;

  void validate() const;
};

struct LossConfig {
  LossWeights weights;
  double epsilon = 1e-6;
  double k_err = 4.0;
  ReparamConfig reparam;
  bool exact_spline_t = true;
  int threads = 0;
};

struct GradDiagnostics {
  std::vector<double> min_abs_sdf;  // per stroke, over all batch samples
  std::vector<double> min_argmax_margin;  // per stroke, Max composition only
};

struct GradResult {
  double loss = 0.0;
  std::vector<double> gradient;  // aligned with ParamVector::values
  LossBreakdown breakdown;
  std::vector<Rgb> colors;  // per ray
  std::vector<double> opacities;
  std::vector<double> errors;
  GradDiagnostics diagnostics;
};

/// Total loss and its gradient with respect to the raw parameters. The constrained
/// values are decoded into `field` and `grid` (templates supplying kinds and
/// config). `detached_colors`, when given, replaces the rendered color inside the
/// error-field term (it is treated as a constant there in any case).
/// Throws NonFiniteError naming the first offending slice.
GradResult loss_and_gradients(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
                              const LossConfig& cfg, const std::vector<Rgb>* detached_colors = nullptr);

/// Forward-only variant; `gradient` is left empty.
GradResult evaluate_loss(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
                         const LossConfig& cfg, const std::vector<Rgb>* detached_colors = nullptr);

struct FdOptions {
  double h = 1e-4;
  double kink_steps = 3.0;  // exclusion radius around non-smooth loci, in units of h
  bool richardson = true;   // also skip indices whose FD(h) and FD(h/2) disagree
  double richardson_tol = 1e-4;  // relative; smooth integrands agree to O(h^2)
};

struct FdReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::vector<std::size_t> skipped;
  std::vector<std::size_t> indices;  // checked indices
  std::vector<double> analytic;
  std::vector<double> numeric;
};

/// Central differences of `f` at x against `analytic` over `subset` (all indices
/// when empty); relative error |a - n| / max(|a|, |n|, 1e-8).
FdReport finite_diff_check(std::span<const double> x, const std::function<double(std::span<const double>)>& f,
                           std::span<const double> analytic, std::span<const std::size_t> subset,
                           const std::function<bool(std::size_t)>& excluded, const FdOptions& opt = {});

/// Checks loss_and_gradients. Stroke indices are skipped when any batch sample
/// has |sdf| < kink_steps * h for that stroke, or, in Max mode, when the argmax
/// margin drops below kink_steps * h. Jitter is frozen by the batch seeds.
FdReport finite_diff_check(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
                           const LossConfig& cfg, std::span<const std::size_t> subset = {},
                           const FdOptions& opt = {});

}  // namespace strokefield
