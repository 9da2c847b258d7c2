// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

#include "strokefield/stroke_geometry.hpp"
#include "strokefield/vec.hpp"

// Batched inner loops of the renderer. Every routine has a scalar reference
// implementation; an AVX2+FMA variant is compiled separately and chosen at
// runtime when the CPU supports it. The variants agree to rounding error, not
// bitwise (FMA contraction and the polynomial exp differ from libm).

namespace strokefield::kernels {

struct KernelTable {
  std::string_view name;

  /// out[i] = base_sdf(base, (x[i], y[i], z[i]), basic)
  void (*base_sdf)(BaseShape base, const BasicParams& basic, const double* x, const double* y,
                   const double* z, std::size_t n, double* out);

  /// Value plus point/basic gradients, one output array per component.
  void (*base_sdf_grad)(BaseShape base, const BasicParams& basic, const double* x, const double* y,
                        const double* z, std::size_t n, double* sdf, double* gx, double* gy, double* gz,
                        double* gb0, double* gb1);

  /// Laplace-CDF region function and its derivative with respect to the sdf.
  void (*laplace_alpha)(const double* sdf, const double* delta, std::size_t n, double* alpha,
                        double* dalpha_dsdf);

  /// Nearest polyline parameter for each point. `vertices` holds segments+1 points
  /// at uniform parameters; writes t* and the polyline distance.
  void (*segment_nearest)(const Vec3* vertices, int segments, const double* x, const double* y,
                          const double* z, std::size_t n, double* t_star, double* distance);
};

const KernelTable& scalar_table();

/// nullptr when the AVX2 variant was not built or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();

/// Table used by the renderer. Chosen on first call from STROKEFIELD_KERNELS
/// ("scalar", "avx2", "auto"; default auto).
const KernelTable& active();

/// Overrides the active table. Returns false when `name` is unknown or unavailable.
bool select(std::string_view name);

}  // namespace strokefield::kernels
