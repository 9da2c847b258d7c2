// SPDX-License-Identifier: Apache-2.0
// Compiled with -mavx2 -mfma. Only reached through avx2_table(), which checks
// CPU support before handing the table out.

#include "strokefield/kernels.hpp"

#if defined(STROKEFIELD_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace strokefield::kernels {

namespace {

inline __m256d vabs(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

inline __m256d vsign(__m256d v) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(v, zero, _CMP_GT_OQ), _mm256_set1_pd(1.0));
  const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(v, zero, _CMP_LT_OQ), _mm256_set1_pd(1.0));
  return _mm256_sub_pd(pos, neg);
}

inline __m256d vclamp(__m256d v, __m256d lo, __m256d hi) { return _mm256_min_pd(_mm256_max_pd(v, lo), hi); }

inline __m256d vnorm(__m256d x, __m256d y, __m256d z) {
  return _mm256_sqrt_pd(_mm256_fmadd_pd(x, x, _mm256_fmadd_pd(y, y, _mm256_mul_pd(z, z))));
}

// Cephes-style exp: range reduction by ln2 and a rational approximation.
inline __m256d vexp(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-700.0), hi = _mm256_set1_pd(700.0);
  x = vclamp(x, lo, hi);
  const __m256d fx =
      _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6), x);
  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_fmadd_pd(_mm256_set1_pd(1.26177193074810590878E-4), xx, _mm256_set1_pd(3.02994407707441961300E-2));
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(9.99999999999999999910E-1));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_fmadd_pd(_mm256_set1_pd(3.00198505138664455042E-6), xx, _mm256_set1_pd(2.52448340349684104192E-3));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766E-1));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));
  // 2^fx via the exponent field; fx is integral and within [-1010, 1010].
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);
  const __m256i ifx = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(fx, magic)), _mm256_castpd_si256(magic));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ifx, _mm256_set1_epi64x(1023)), 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(bits));
}

struct Cube {
  __m256d value, gx, gy, gz;
};

inline Cube cube_grad(__m256d px, __m256d py, __m256d pz) {
  const __m256d one = _mm256_set1_pd(1.0), zero = _mm256_setzero_pd();
  const __m256d qx = _mm256_sub_pd(vabs(px), one);
  const __m256d qy = _mm256_sub_pd(vabs(py), one);
  const __m256d qz = _mm256_sub_pd(vabs(pz), one);
  const __m256d mq = _mm256_max_pd(qx, _mm256_max_pd(qy, qz));
  const __m256d ox = _mm256_max_pd(qx, zero), oy = _mm256_max_pd(qy, zero), oz = _mm256_max_pd(qz, zero);
  const __m256d n = vnorm(ox, oy, oz);
  const __m256d outside = _mm256_cmp_pd(mq, zero, _CMP_GT_OQ);
  const __m256d inv_n = _mm256_div_pd(one, _mm256_blendv_pd(one, n, outside));
  // Inside: gradient along the dominant axis, first axis wins ties.
  const __m256d sel_x = _mm256_and_pd(_mm256_cmp_pd(qx, qy, _CMP_GE_OQ), _mm256_cmp_pd(qx, qz, _CMP_GE_OQ));
  const __m256d sel_y = _mm256_andnot_pd(sel_x, _mm256_cmp_pd(qy, qz, _CMP_GE_OQ));
  const __m256d sel_z = _mm256_andnot_pd(_mm256_or_pd(sel_x, sel_y), _mm256_castsi256_pd(_mm256_set1_epi64x(-1)));
  const __m256d sx = vsign(px), sy = vsign(py), sz = vsign(pz);
  Cube c;
  c.value = _mm256_blendv_pd(mq, n, outside);
  c.gx = _mm256_blendv_pd(_mm256_and_pd(sel_x, sx), _mm256_mul_pd(_mm256_mul_pd(sx, ox), inv_n), outside);
  c.gy = _mm256_blendv_pd(_mm256_and_pd(sel_y, sy), _mm256_mul_pd(_mm256_mul_pd(sy, oy), inv_n), outside);
  c.gz = _mm256_blendv_pd(_mm256_and_pd(sel_z, sz), _mm256_mul_pd(_mm256_mul_pd(sz, oz), inv_n), outside);
  return c;
}

inline __m256d cube_value(__m256d px, __m256d py, __m256d pz) {
  const __m256d one = _mm256_set1_pd(1.0), zero = _mm256_setzero_pd();
  const __m256d qx = _mm256_sub_pd(vabs(px), one);
  const __m256d qy = _mm256_sub_pd(vabs(py), one);
  const __m256d qz = _mm256_sub_pd(vabs(pz), one);
  const __m256d inside = _mm256_min_pd(_mm256_max_pd(qx, _mm256_max_pd(qy, qz)), zero);
  return _mm256_add_pd(inside, vnorm(_mm256_max_pd(qx, zero), _mm256_max_pd(qy, zero), _mm256_max_pd(qz, zero)));
}

struct Grad8 {
  __m256d value, gx, gy, gz, gb0, gb1;
};

inline Grad8 eval_grad(BaseShape base, const BasicParams& basic, __m256d px, __m256d py, __m256d pz) {
  const __m256d zero = _mm256_setzero_pd(), one = _mm256_set1_pd(1.0);
  const __m256d inv_sqrt3 = _mm256_set1_pd(0.5773502691896258);
  Grad8 g{zero, zero, zero, zero, zero, zero};
  switch (base) {
    case BaseShape::Sphere: {
      const __m256d n = vnorm(px, py, pz);
      const __m256d nz = _mm256_cmp_pd(n, zero, _CMP_GT_OQ);
      const __m256d inv = _mm256_and_pd(nz, _mm256_div_pd(one, _mm256_blendv_pd(one, n, nz)));
      g.value = _mm256_sub_pd(n, one);
      g.gx = _mm256_mul_pd(px, inv);
      g.gy = _mm256_mul_pd(py, inv);
      g.gz = _mm256_mul_pd(pz, inv);
      return g;
    }
    case BaseShape::Cube:
    case BaseShape::RoundCube: {
      const Cube c = cube_grad(px, py, pz);
      g.value = c.value;
      g.gx = c.gx;
      g.gy = c.gy;
      g.gz = c.gz;
      if (base == BaseShape::RoundCube) {
        g.value = _mm256_sub_pd(g.value, _mm256_set1_pd(basic[0]));
        g.gb0 = _mm256_set1_pd(-1.0);
      }
      return g;
    }
    case BaseShape::Tetrahedron: {
      const __m256d s = _mm256_add_pd(px, py);
      const __m256d a = vabs(s);
      const __m256d v1 = _mm256_sub_pd(a, pz), v2 = _mm256_add_pd(a, pz);
      const __m256d first = _mm256_cmp_pd(v1, v2, _CMP_GT_OQ);
      const __m256d sa = _mm256_mul_pd(vsign(s), inv_sqrt3);
      g.value = _mm256_mul_pd(_mm256_sub_pd(_mm256_blendv_pd(v2, v1, first), one), inv_sqrt3);
      g.gx = sa;
      g.gy = sa;
      g.gz = _mm256_blendv_pd(inv_sqrt3, _mm256_sub_pd(zero, inv_sqrt3), first);
      return g;
    }
    case BaseShape::Octahedron: {
      const __m256d l1 = _mm256_add_pd(vabs(px), _mm256_add_pd(vabs(py), vabs(pz)));
      g.value = _mm256_mul_pd(_mm256_sub_pd(l1, one), inv_sqrt3);
      g.gx = _mm256_mul_pd(vsign(px), inv_sqrt3);
      g.gy = _mm256_mul_pd(vsign(py), inv_sqrt3);
      g.gz = _mm256_mul_pd(vsign(pz), inv_sqrt3);
      return g;
    }
    case BaseShape::Triprism: {
      const __m256d h = _mm256_set1_pd(basic[0]);
      const __m256d half = _mm256_set1_pd(0.5), hs3 = _mm256_set1_pd(0.8660254037844386);
      const __m256d v1 = _mm256_sub_pd(vabs(py), h);
      const __m256d m1 = _mm256_fmadd_pd(vabs(px), hs3, _mm256_mul_pd(pz, half));
      const __m256d m2 = _mm256_sub_pd(zero, pz);
      const __m256d v2 = _mm256_sub_pd(_mm256_max_pd(m1, m2), half);
      const __m256d take1 = _mm256_cmp_pd(v1, v2, _CMP_GE_OQ);
      const __m256d take_m1 = _mm256_andnot_pd(take1, _mm256_cmp_pd(m1, m2, _CMP_GE_OQ));
      const __m256d take_m2 = _mm256_andnot_pd(_mm256_or_pd(take1, take_m1), _mm256_castsi256_pd(_mm256_set1_epi64x(-1)));
      g.value = _mm256_blendv_pd(v2, v1, take1);
      g.gx = _mm256_and_pd(take_m1, _mm256_mul_pd(vsign(px), hs3));
      g.gy = _mm256_and_pd(take1, vsign(py));
      g.gz = _mm256_or_pd(_mm256_and_pd(take_m1, half), _mm256_and_pd(take_m2, _mm256_set1_pd(-1.0)));
      g.gb0 = _mm256_and_pd(take1, _mm256_set1_pd(-1.0));
      return g;
    }
    case BaseShape::Line: {
      const bool clamped_h = basic[0] < kMinLineHalfLength;
      const double hs = clamped_h ? kMinLineHalfLength : basic[0];
      const __m256d h = _mm256_set1_pd(hs), nh = _mm256_set1_pd(-hs), r = _mm256_set1_pd(basic[1]);
      const __m256d qy = _mm256_sub_pd(py, vclamp(py, nh, h));
      const __m256d d = vnorm(px, qy, pz);
      const __m256d u = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(0.5), _mm256_add_pd(py, h)), _mm256_set1_pd(1.0 / hs));
      const __m256d taper = vclamp(u, zero, one);
      g.value = _mm256_fnmadd_pd(r, taper, d);
      const __m256d dpos = _mm256_cmp_pd(d, zero, _CMP_GT_OQ);
      const __m256d inv_d = _mm256_and_pd(dpos, _mm256_div_pd(one, _mm256_blendv_pd(one, d, dpos)));
      const __m256d above = _mm256_cmp_pd(py, h, _CMP_GT_OQ);
      const __m256d below = _mm256_cmp_pd(py, nh, _CMP_LT_OQ);
      const __m256d qy_over_d = _mm256_mul_pd(qy, inv_d);
      const __m256d dd_dh = _mm256_or_pd(_mm256_and_pd(above, _mm256_sub_pd(zero, qy_over_d)),
                                         _mm256_and_pd(below, qy_over_d));
      const __m256d interior = _mm256_and_pd(_mm256_cmp_pd(u, zero, _CMP_GT_OQ), _mm256_cmp_pd(u, one, _CMP_LT_OQ));
      const __m256d dtaper_dy = _mm256_and_pd(interior, _mm256_set1_pd(0.5 / hs));
      const __m256d dtaper_dh = _mm256_and_pd(interior, _mm256_mul_pd(py, _mm256_set1_pd(-0.5 / (hs * hs))));
      g.gx = _mm256_mul_pd(px, inv_d);
      g.gy = _mm256_fnmadd_pd(r, dtaper_dy, qy_over_d);
      g.gz = _mm256_mul_pd(pz, inv_d);
      g.gb0 = clamped_h ? zero : _mm256_fnmadd_pd(r, dtaper_dh, dd_dh);
      g.gb1 = _mm256_sub_pd(zero, taper);
      return g;
    }
  }
  return g;
}

inline __m256d eval_value(BaseShape base, const BasicParams& basic, __m256d px, __m256d py, __m256d pz) {
  const __m256d one = _mm256_set1_pd(1.0);
  switch (base) {
    case BaseShape::Sphere: return _mm256_sub_pd(vnorm(px, py, pz), one);
    case BaseShape::Cube: return cube_value(px, py, pz);
    case BaseShape::RoundCube: return _mm256_sub_pd(cube_value(px, py, pz), _mm256_set1_pd(basic[0]));
    default: return eval_grad(base, basic, px, py, pz).value;
  }
}

void avx2_base_sdf(BaseShape base, const BasicParams& basic, const double* x, const double* y, const double* z,
                   std::size_t n, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, eval_value(base, basic, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), _mm256_loadu_pd(z + i)));
  scalar_table().base_sdf(base, basic, x + i, y + i, z + i, n - i, out + i);
}

void avx2_base_sdf_grad(BaseShape base, const BasicParams& basic, const double* x, const double* y, const double* z,
                        std::size_t n, double* sdf, double* gx, double* gy, double* gz, double* gb0, double* gb1) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const Grad8 g = eval_grad(base, basic, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), _mm256_loadu_pd(z + i));
    _mm256_storeu_pd(sdf + i, g.value);
    _mm256_storeu_pd(gx + i, g.gx);
    _mm256_storeu_pd(gy + i, g.gy);
    _mm256_storeu_pd(gz + i, g.gz);
    _mm256_storeu_pd(gb0 + i, g.gb0);
    _mm256_storeu_pd(gb1 + i, g.gb1);
  }
  scalar_table().base_sdf_grad(base, basic, x + i, y + i, z + i, n - i, sdf + i, gx + i, gy + i, gz + i, gb0 + i,
                               gb1 + i);
}

void avx2_laplace_alpha(const double* sdf, const double* delta, std::size_t n, double* alpha, double* dalpha) {
  std::size_t i = 0;
  const __m256d zero = _mm256_setzero_pd(), one = _mm256_set1_pd(1.0), half = _mm256_set1_pd(0.5);
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_loadu_pd(sdf + i);
    const __m256d d = _mm256_loadu_pd(delta + i);
    const __m256d e = vexp(_mm256_sub_pd(zero, _mm256_div_pd(vabs(s), d)));
    const __m256d h = _mm256_mul_pd(half, e);
    const __m256d inside = _mm256_cmp_pd(s, zero, _CMP_LE_OQ);
    _mm256_storeu_pd(alpha + i, _mm256_blendv_pd(h, _mm256_sub_pd(one, h), inside));
    _mm256_storeu_pd(dalpha + i, _mm256_sub_pd(zero, _mm256_div_pd(h, d)));
  }
  scalar_table().laplace_alpha(sdf + i, delta + i, n - i, alpha + i, dalpha + i);
}

void avx2_segment_nearest(const Vec3* vertices, int segments, const double* x, const double* y, const double* z,
                          std::size_t n, double* t_star, double* distance) {
  std::size_t i = 0;
  const __m256d zero = _mm256_setzero_pd(), one = _mm256_set1_pd(1.0);
  const double inv_k = 1.0 / segments;
  for (; i + 4 <= n; i += 4) {
    const __m256d px = _mm256_loadu_pd(x + i), py = _mm256_loadu_pd(y + i), pz = _mm256_loadu_pd(z + i);
    __m256d best = _mm256_set1_pd(INFINITY);
    __m256d bt = zero;
    for (int s = 1; s <= segments; ++s) {
      const Vec3& a = vertices[s - 1];
      const Vec3 ab = vertices[s] - a;
      const double len2 = dot(ab, ab);
      const double inv_len2 = len2 > 0.0 ? 1.0 / len2 : 0.0;
      const __m256d ax = _mm256_sub_pd(px, _mm256_set1_pd(a.x));
      const __m256d ay = _mm256_sub_pd(py, _mm256_set1_pd(a.y));
      const __m256d az = _mm256_sub_pd(pz, _mm256_set1_pd(a.z));
      const __m256d bx = _mm256_set1_pd(ab.x), by = _mm256_set1_pd(ab.y), bz = _mm256_set1_pd(ab.z);
      const __m256d proj = _mm256_fmadd_pd(ax, bx, _mm256_fmadd_pd(ay, by, _mm256_mul_pd(az, bz)));
      const __m256d tp = vclamp(_mm256_mul_pd(proj, _mm256_set1_pd(inv_len2)), zero, one);
      const __m256d dx = _mm256_fnmadd_pd(bx, tp, ax);
      const __m256d dy = _mm256_fnmadd_pd(by, tp, ay);
      const __m256d dz = _mm256_fnmadd_pd(bz, tp, az);
      const __m256d d2 = _mm256_fmadd_pd(dx, dx, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dz, dz)));
      const __m256d better = _mm256_cmp_pd(d2, best, _CMP_LT_OQ);
      const __m256d t = _mm256_fmadd_pd(tp, _mm256_set1_pd(inv_k), _mm256_set1_pd((s - 1) * inv_k));
      best = _mm256_blendv_pd(best, d2, better);
      bt = _mm256_blendv_pd(bt, t, better);
    }
    _mm256_storeu_pd(t_star + i, bt);
    _mm256_storeu_pd(distance + i, _mm256_sqrt_pd(best));
  }
  scalar_table().segment_nearest(vertices, segments, x + i, y + i, z + i, n - i, t_star + i, distance + i);
}

const KernelTable kAvx2{"avx2", avx2_base_sdf, avx2_base_sdf_grad, avx2_laplace_alpha, avx2_segment_nearest};

}  // namespace

const KernelTable* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

}  // namespace strokefield::kernels

#else

namespace strokefield::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace strokefield::kernels

#endif
