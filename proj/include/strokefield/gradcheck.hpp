// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "strokefield/error_field.hpp"
#include "strokefield/grad.hpp"

namespace strokefield {

struct GradcheckProblem {
  StrokeField field;
  ErrorGrid grid;  // size 0 when no grid is checked
  RayBatch batch;
};

/// Seeded random field of `strokes` mixed primitives and splines plus a random
/// error grid of `grid_resolution`^3 (0 for none).
GradcheckProblem random_gradcheck_problem(std::uint64_t seed, int strokes = 5, int grid_resolution = 16);

/// Replaces the batch with `rays` camera rays from random orbit views, random
/// color/mask targets and seeded jitter.
void random_gradcheck_batch(GradcheckProblem& problem, std::uint64_t seed, int rays = 16, int n_samples = 64);

struct GradcheckSummary {
  FdReport report;
  std::size_t parameters = 0;
  std::string worst_slice;
};

GradcheckSummary run_gradcheck(GradcheckProblem& problem, const LossConfig& cfg = {}, const FdOptions& opt = {});

}  // namespace strokefield
