// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "strokefield/kernels.hpp"
#include "strokefield/spline.hpp"

namespace strokefield::kernels {

namespace {

void scalar_base_sdf(BaseShape base, const BasicParams& basic, const double* x, const double* y,
                     const double* z, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = base_sdf(base, {x[i], y[i], z[i]}, basic);
}

void scalar_base_sdf_grad(BaseShape base, const BasicParams& basic, const double* x, const double* y,
                          const double* z, std::size_t n, double* sdf, double* gx, double* gy, double* gz,
                          double* gb0, double* gb1) {
  for (std::size_t i = 0; i < n; ++i) {
    const SdfGrad g = base_sdf_grad(base, {x[i], y[i], z[i]}, basic);
    sdf[i] = g.value;
    gx[i] = g.dp.x;
    gy[i] = g.dp.y;
    gz[i] = g.dp.z;
    gb0[i] = g.dbasic[0];
    gb1[i] = g.dbasic[1];
  }
}

void scalar_laplace_alpha(const double* sdf, const double* delta, std::size_t n, double* alpha,
                          double* dalpha) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = sdf[i], d = delta[i];
    const double half = 0.5 * std::exp(-std::abs(s) / d);
    alpha[i] = s <= 0.0 ? 1.0 - half : half;
    dalpha[i] = -half / d;
  }
}

void scalar_segment_nearest(const Vec3* vertices, int segments, const double* x, const double* y,
                            const double* z, std::size_t n, double* t_star, double* distance) {
  const std::span<const Vec3> verts(vertices, static_cast<std::size_t>(segments) + 1);
  for (std::size_t i = 0; i < n; ++i) t_star[i] = nearest_t_polyline(verts, {x[i], y[i], z[i]}, &distance[i]);
}

const KernelTable kScalar{"scalar", scalar_base_sdf, scalar_base_sdf_grad, scalar_laplace_alpha,
                          scalar_segment_nearest};

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* from_name(std::string_view name) {
  if (name == "scalar") return &kScalar;
  if (name == "avx2") return avx2_table();
  if (name == "auto" || name.empty()) {
    const KernelTable* v = avx2_table();
    return v ? v : &kScalar;
  }
  return nullptr;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t) return *t;
  const char* env = std::getenv("STROKEFIELD_KERNELS");
  const KernelTable* chosen = from_name(env ? std::string_view(env) : std::string_view("auto"));
  if (!chosen) chosen = from_name("auto");
  g_active.store(chosen, std::memory_order_release);
  return *chosen;
}

bool select(std::string_view name) {
  const KernelTable* t = from_name(name);
  if (!t) return false;
  g_active.store(t, std::memory_order_release);
  return true;
}

}  // namespace strokefield::kernels
