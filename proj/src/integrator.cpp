// SPDX-License-Identifier: Apache-2.0
#include "strokefield/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "strokefield/errors.hpp"
#include "strokefield/kernels.hpp"

namespace strokefield {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double region_delta(const RegionConfig& region, double scene_delta, double scale_correction, bool* free) {
  const double d = scene_delta / scale_correction;
  if (free) *free = d > region.delta_min && d < region.delta_max;
  return std::clamp(d, region.delta_min, region.delta_max);
}

// Parameter range [ta, tb] where |p0 + t v| <= radius, or false when empty.
bool ball_interval(const Vec3& p0, const Vec3& v, double radius, double& ta, double& tb) {
  const double a = dot(v, v);
  const double b = dot(p0, v);
  const double c = dot(p0, p0) - radius * radius;
  const double disc = b * b - a * c;
  if (disc < 0.0 || a <= 0.0) return false;
  const double sq = std::sqrt(disc);
  ta = (-b - sq) / a;
  tb = (-b + sq) / a;
  return true;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  SplitMix64 g(a);
  return SplitMix64(g.next() ^ b).next();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STROKEFIELD_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void stratified_samples(double t_near, double t_far, int n, std::uint64_t seed, bool jitter, RaySamples& out) {
  const std::size_t count = static_cast<std::size_t>(std::max(n, 0));
  const double step = count ? (t_far - t_near) / static_cast<double>(count) : 0.0;
  out.t.resize(count);
  out.dt.assign(count, step);
  SplitMix64 g(seed);
  for (std::size_t k = 0; k < count; ++k) {
    const double u = jitter ? g.uniform() : 0.5;
    out.t[k] = t_near + (static_cast<double>(k) + u) * step;
  }
}

void midpoint_intervals(double t_near, double t_far, RaySamples& samples) {
  auto& t = samples.t;
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  samples.dt.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = k == 0 ? t_near : 0.5 * (t[k - 1] + t[k]);
    const double hi = k + 1 == n ? t_far : 0.5 * (t[k] + t[k + 1]);
    samples.dt[k] = std::max(hi - lo, 0.0);
  }
}

PreparedField prepare_field(const StrokeField& field) {
  PreparedField pf;
  pf.region = field.region;
  pf.background = field.background;
  pf.segments = field.spline_segments;
  if (pf.segments < 1) throw DomainError("spline segment count must be at least 1");
  pf.strokes.reserve(field.strokes.size());
  for (const Stroke& st : field.strokes) {
    PreparedStroke ps;
    if (const auto* p = std::get_if<PrimitiveStroke>(&st)) {
      const Transform t = p->effective_transform();
      if (!(t.scale.x > 0.0 && t.scale.y > 0.0 && t.scale.z > 0.0))
        throw DomainError("stroke scale must be strictly positive");
      if (static_cast<int>(p->basic.size()) != traits(p->kind).basic_count)
        throw ParameterShapeError(std::string(traits(p->kind).name) + ": wrong basic parameter count");
      ps.kind = p->kind;
      ps.base = traits(p->kind).base;
      ps.basic = p->basic_array();
      ps.translation = t.translation;
      ps.euler = t.rotation;
      ps.scale = t.scale;
      ps.rotation = rotation_matrix(t.rotation);
      ps.to_unit = Mat3::diag({1.0 / t.scale.x, 1.0 / t.scale.y, 1.0 / t.scale.z}) * ps.rotation.transposed();
      ps.min_scale_axis = 0;
      for (int a = 1; a < 3; ++a)
        if (t.scale[a] < t.scale[ps.min_scale_axis]) ps.min_scale_axis = a;
      ps.scale_correction = t.scale[ps.min_scale_axis];
      ps.color = p->color;
      ps.density = p->density;
    } else {
      const auto& s = std::get<SplineStroke>(st);
      if (static_cast<int>(s.control_points.size()) != control_count(s.kind))
        throw ParameterShapeError(std::string(spline_name(s.kind)) + ": wrong control point count");
      ps.spline = true;
      ps.curve = s.kind;
      ps.n_ctrl = control_count(s.kind);
      std::copy(s.control_points.begin(), s.control_points.end(), ps.ctrl.begin());
      ps.r_a = s.r_a;
      ps.r_b = s.r_b;
      ps.vertices.resize(pf.segments + 1);
      for (int i = 0; i <= pf.segments; ++i) {
        const auto b = spline_basis(s.kind, static_cast<double>(i) / pf.segments);
        Vec3 c;
        for (int j = 0; j < ps.n_ctrl; ++j) c += ps.ctrl[j] * b[j];
        ps.vertices[i] = c;
      }
      const auto hull = bezier_hull(s.kind, s.control_points);
      Vec3 center;
      for (const Vec3& h : hull) center += h;
      center *= 1.0 / static_cast<double>(hull.size());
      double rho = 0.0;
      for (const Vec3& h : hull) rho = std::max(rho, norm(h - center));
      ps.bound_center = center;
      ps.bound_radius = rho + std::max({s.r_a, s.r_b, 0.0});
      ps.color = s.color;
      ps.density = s.density;
    }
    pf.strokes.push_back(std::move(ps));
  }
  return pf;
}

void StrokeGrad::add(const StrokeGrad& o) {
  translation += o.translation;
  for (int i = 0; i < 9; ++i) rotation_z.m[i] += o.rotation_z.m[i];
  scale += o.scale;
  basic[0] += o.basic[0];
  basic[1] += o.basic[1];
  for (int i = 0; i < 4; ++i) ctrl[i] += o.ctrl[i];
  r_a += o.r_a;
  r_b += o.r_b;
  color += o.color;
  density += o.density;
}

Vec3 StrokeGrad::euler(const PreparedStroke& s) const {
  const auto dr = rotation_matrix_derivatives(s.euler);
  Vec3 out;
  for (int j = 0; j < 3; ++j) {
    double acc = 0.0;
    for (int e = 0; e < 9; ++e) acc += dr[j].m[e] * rotation_z.m[e];
    out[j] = acc;
  }
  return out;
}

RayOutput RayWorkspace::forward(const PreparedField& field, const ErrorGrid* grid, const Ray& ray,
                                const RaySamples& samples) {
  field_ = &field;
  grid_ = grid;
  ray_ = ray;
  n_ = samples.t.size();
  m_ = field.strokes.size();
  t_.assign(samples.t.begin(), samples.t.end());
  dt_.assign(samples.dt.begin(), samples.dt.end());
  x_.resize(n_);
  dscene_.resize(n_);
  double dmax_scene = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    x_[k] = ray.origin + ray.direction * t_[k];
    dscene_[k] = scene_delta(field.region, ray.footprint, t_[k]);
    dmax_scene = std::max(dmax_scene, dscene_[k]);
  }

  const std::size_t mn = m_ * n_;
  k0_.assign(m_, 0);
  k1_.assign(m_, 0);
  alpha_.resize(mn);
  dads_.resize(mn);
  sdf_.resize(mn);
  delta_.resize(mn);
  tstar_.resize(mn);
  delta_free_.resize(mn);
  min_abs_sdf_.assign(m_, kInf);
  min_margin_.assign(m_, kInf);

  const bool cull = field.cull && field.region.composition == Composition::Overlay;
  for (std::size_t i = 0; i < m_ && n_ > 0; ++i) {
    const PreparedStroke& s = field.strokes[i];
    std::size_t k0 = 0, k1 = n_;
    if (cull) {
      double ta = 0.0, tb = 0.0;
      bool any = true;
      if (s.spline) {
        const double dm = std::clamp(dmax_scene, field.region.delta_min, field.region.delta_max);
        any = ball_interval(ray.origin - s.bound_center, ray.direction, s.bound_radius + kCullMargin * dm, ta, tb);
      } else {
        const double dm = region_delta(field.region, dmax_scene, s.scale_correction, nullptr);
        const double radius = base_cull_radius(s.base, s.basic, kCullMargin * dm);
        if (std::isfinite(radius))
          any = ball_interval(s.to_unit * (ray.origin - s.translation), s.to_unit * ray.direction, radius, ta, tb);
        else
          ta = -kInf, tb = kInf;
      }
      if (!any) {
        k0 = k1 = 0;
      } else {
        k0 = static_cast<std::size_t>(std::lower_bound(t_.begin(), t_.end(), ta) - t_.begin());
        k1 = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), tb) - t_.begin());
        if (k1 < k0) k1 = k0;
      }
    }
    k0_[i] = k0;
    k1_[i] = k1;
    if (k1 == k0) continue;
    if (s.spline)
      eval_spline(i, s);
    else
      eval_primitive(i, s);
  }

  sigma_.resize(n_);
  color_.resize(n_);
  trans_.resize(n_ + 1);
  w_.resize(n_);
  trans_[0] = 1.0;
  Rgb c_acc;
  for (std::size_t k = 0; k < n_; ++k) {
    compose(k, sigma_[k], color_[k]);
    const double x = sigma_[k] * dt_[k];
    w_[k] = trans_[k] * -std::expm1(-x);
    trans_[k + 1] = trans_[k] * std::exp(-x);
    c_acc += color_[k] * w_[k];
  }
  out_ = {};
  out_.hit = n_ > 0;
  out_.color = c_acc + field.background * trans_[n_];
  out_.opacity = 1.0 - trans_[n_];

  e_sum_ = 0.0;
  err_.resize(grid ? n_ : 0);
  if (grid) {
    for (std::size_t k = 0; k < n_; ++k) {
      err_[k] = grid->sample(x_[k]);
      e_sum_ += err_[k] * dt_[k];
    }
    out_.error = -std::expm1(-e_sum_);
  }
  return out_;
}

void RayWorkspace::eval_primitive(std::size_t i, const PreparedStroke& s) {
  const std::size_t k0 = k0_[i], cnt = k1_[i] - k0, base = i * n_ + k0;
  sx_.resize(cnt);
  sy_.resize(cnt);
  sz_.resize(cnt);
  for (std::size_t j = 0; j < cnt; ++j) {
    const Vec3 p = s.to_unit * (x_[k0 + j] - s.translation);
    sx_[j] = p.x;
    sy_[j] = p.y;
    sz_[j] = p.z;
  }
  const auto& kt = kernels::active();
  kt.base_sdf(s.base, s.basic, sx_.data(), sy_.data(), sz_.data(), cnt, &sdf_[base]);
  for (std::size_t j = 0; j < cnt; ++j) {
    bool free = false;
    delta_[base + j] = region_delta(field_->region, dscene_[k0 + j], s.scale_correction, &free);
    delta_free_[base + j] = free;
    min_abs_sdf_[i] = std::min(min_abs_sdf_[i], std::abs(sdf_[base + j]));
  }
  kt.laplace_alpha(&sdf_[base], &delta_[base], cnt, &alpha_[base], &dads_[base]);
}

void RayWorkspace::eval_spline(std::size_t i, const PreparedStroke& s) {
  const std::size_t k0 = k0_[i], cnt = k1_[i] - k0, base = i * n_ + k0;
  sx_.resize(cnt);
  sy_.resize(cnt);
  sz_.resize(cnt);
  s0_.resize(cnt);
  for (std::size_t j = 0; j < cnt; ++j) {
    sx_[j] = x_[k0 + j].x;
    sy_[j] = x_[k0 + j].y;
    sz_[j] = x_[k0 + j].z;
  }
  const auto& kt = kernels::active();
  kt.segment_nearest(s.vertices.data(), field_->segments, sx_.data(), sy_.data(), sz_.data(), cnt, &tstar_[base],
                     s0_.data());
  for (std::size_t j = 0; j < cnt; ++j) {
    const double ts = tstar_[base + j];
    const auto b = spline_basis(s.curve, ts);
    Vec3 c;
    for (int q = 0; q < s.n_ctrl; ++q) c += s.ctrl[q] * b[q];
    const double v = norm(x_[k0 + j] - c) - (s.r_a * (1.0 - ts) + s.r_b * ts);
    sdf_[base + j] = v;
    delta_[base + j] = region_delta(field_->region, dscene_[k0 + j], 1.0, nullptr);
    delta_free_[base + j] = 0;
    min_abs_sdf_[i] = std::min(min_abs_sdf_[i], std::abs(v));
  }
  kt.laplace_alpha(&sdf_[base], &delta_[base], cnt, &alpha_[base], &dads_[base]);
}

void RayWorkspace::compose(std::size_t k, double& sigma, Rgb& color) {
  const PreparedField& f = *field_;
  active_.clear();
  for (std::size_t i = 0; i < m_; ++i)
    if (k0_[i] <= k && k < k1_[i]) active_.push_back(i);
  sigma = 0.0;
  color = f.background;
  if (active_.empty()) return;

  switch (f.region.composition) {
    case Composition::Overlay: {
      double as = 0.0, acov = 0.0;
      Rgb ac;
      for (std::size_t i : active_) {
        const double a = alpha_[i * n_ + k];
        const PreparedStroke& s = f.strokes[i];
        as = as * (1.0 - a) + s.density * a;
        acov = acov * (1.0 - a) + a;
        ac = ac * (1.0 - a) + s.color * a;
      }
      sigma = as;
      if (acov >= kCoverageGuard) color = ac * (1.0 / acov);
      break;
    }
    case Composition::Max: {
      std::size_t best = active_[0];
      for (std::size_t j = 1; j < active_.size(); ++j)
        if (alpha_[active_[j] * n_ + k] > alpha_[best * n_ + k]) best = active_[j];
      // Gap in -sdf/delta (the ordering alpha follows), scaled back to sdf units.
      const double ub = -sdf_[best * n_ + k] / delta_[best * n_ + k];
      for (std::size_t i : active_) {
        if (i == best) continue;
        const double ui = -sdf_[i * n_ + k] / delta_[i * n_ + k];
        const double gap = std::min(delta_[best * n_ + k], delta_[i * n_ + k]) * std::abs(ub - ui);
        min_margin_[best] = std::min(min_margin_[best], gap);
        min_margin_[i] = std::min(min_margin_[i], gap);
      }
      sigma = f.strokes[best].density * alpha_[best * n_ + k];
      color = f.strokes[best].color;
      break;
    }
    case Composition::Softmax: {
      double amax = -kInf;
      for (std::size_t i : active_) amax = std::max(amax, alpha_[i * n_ + k]);
      double z = 0.0, sn = 0.0;
      Rgb cn;
      for (std::size_t i : active_) {
        const double a = alpha_[i * n_ + k];
        const double w = std::exp((a - amax) / f.region.tau);
        z += w;
        sn += f.strokes[i].density * a * w;
        cn += f.strokes[i].color * w;
      }
      sigma = sn / z;
      color = cn * (1.0 / z);
      break;
    }
  }
}

void RayWorkspace::backward(const Rgb& g_color, double g_opacity, double g_error, double g_error_sample,
                            std::span<StrokeGrad> stroke_grads, GridGrad* grid_grad) {
  if (!out_.hit) return;
  const PreparedField& f = *field_;
  galpha_.assign(m_ * n_, 0.0);

  const double t_end = trans_[n_];
  Rgb suffix = f.background * t_end;
  for (std::size_t kk = n_; kk-- > 0;) {
    const double g_sigma = dt_[kk] * (dot(g_color, color_[kk] * trans_[kk + 1] - suffix) + g_opacity * t_end);
    const Rgb g_c = g_color * w_[kk];
    suffix += color_[kk] * w_[kk];
    compose_backward(kk, g_sigma, g_c, stroke_grads);
  }

  for (std::size_t i = 0; i < m_; ++i)
    if (k1_[i] > k0_[i]) geometry_backward(i, f.strokes[i], stroke_grads[i]);

  if (grid_ && grid_grad && (g_error != 0.0 || g_error_sample != 0.0)) {
    const double surv = std::exp(-e_sum_);
    for (std::size_t k = 0; k < n_; ++k) {
      const double g = g_error * surv * dt_[k] + g_error_sample;
      if (g == 0.0) continue;
      const ErrorGrid::Stencil st = grid_->stencil(x_[k]);
      if (!st.inside) continue;
      const double gr = g * logistic(st.raw);
      for (int c = 0; c < 8; ++c)
        if (st.weight[c] != 0.0) grid_grad->emplace_back(static_cast<std::uint32_t>(st.index[c]), gr * st.weight[c]);
    }
  }
}

void RayWorkspace::compose_backward(std::size_t k, double g_sigma, const Rgb& g_color, std::span<StrokeGrad> grads) {
  const PreparedField& f = *field_;
  active_.clear();
  for (std::size_t i = 0; i < m_; ++i)
    if (k0_[i] <= k && k < k1_[i]) active_.push_back(i);
  if (active_.empty()) return;
  const std::size_t na = active_.size();

  switch (f.region.composition) {
    case Composition::Overlay: {
      pre_sigma_.resize(na);
      pre_cov_.resize(na);
      pre_color_.resize(na);
      double as = 0.0, acov = 0.0;
      Rgb ac;
      for (std::size_t j = 0; j < na; ++j) {
        const std::size_t i = active_[j];
        const double a = alpha_[i * n_ + k];
        pre_sigma_[j] = as;
        pre_cov_[j] = acov;
        pre_color_[j] = ac;
        as = as * (1.0 - a) + f.strokes[i].density * a;
        acov = acov * (1.0 - a) + a;
        ac = ac * (1.0 - a) + f.strokes[i].color * a;
      }
      const bool normalized = acov >= kCoverageGuard;
      const double inv_cov = normalized ? 1.0 / acov : 0.0;
      const Rgb c = normalized ? ac * inv_cov : f.background;
      const double gc_dot_c = dot(g_color, c);
      double p = 1.0;
      for (std::size_t j = na; j-- > 0;) {
        const std::size_t i = active_[j];
        const PreparedStroke& s = f.strokes[i];
        const double a = alpha_[i * n_ + k];
        double ga = g_sigma * (s.density - pre_sigma_[j]) * p;
        if (normalized) {
          const double dcov = (1.0 - pre_cov_[j]) * p;
          const Rgb dnum = (s.color - pre_color_[j]) * p;
          ga += (dot(g_color, dnum) - gc_dot_c * dcov) * inv_cov;
          grads[i].color += g_color * (a * p * inv_cov);
        }
        grads[i].density += g_sigma * a * p;
        galpha_[i * n_ + k] += ga;
        p *= 1.0 - a;
      }
      break;
    }
    case Composition::Max: {
      std::size_t best = active_[0];
      for (std::size_t j = 1; j < na; ++j)
        if (alpha_[active_[j] * n_ + k] > alpha_[best * n_ + k]) best = active_[j];
      const double a = alpha_[best * n_ + k];
      galpha_[best * n_ + k] += g_sigma * f.strokes[best].density;
      grads[best].density += g_sigma * a;
      grads[best].color += g_color;
      break;
    }
    case Composition::Softmax: {
      const double tau = f.region.tau;
      double amax = -kInf;
      for (std::size_t i : active_) amax = std::max(amax, alpha_[i * n_ + k]);
      pre_sigma_.resize(na);
      double z = 0.0, sn = 0.0;
      Rgb cn;
      for (std::size_t j = 0; j < na; ++j) {
        const std::size_t i = active_[j];
        const double a = alpha_[i * n_ + k];
        pre_sigma_[j] = std::exp((a - amax) / tau);
        z += pre_sigma_[j];
        sn += f.strokes[i].density * a * pre_sigma_[j];
        cn += f.strokes[i].color * pre_sigma_[j];
      }
      const double sigma = sn / z;
      const Rgb c = cn * (1.0 / z);
      for (std::size_t j = 0; j < na; ++j) {
        const std::size_t i = active_[j];
        const PreparedStroke& s = f.strokes[i];
        const double a = alpha_[i * n_ + k];
        const double w = pre_sigma_[j] / z;
        const double dsig = s.density * w + (w / tau) * (s.density * a - sigma);
        const double dcol = w / tau;
        galpha_[i * n_ + k] += g_sigma * dsig + dcol * dot(g_color, s.color - c);
        grads[i].density += g_sigma * a * w;
        grads[i].color += g_color * w;
      }
      break;
    }
  }
}

void RayWorkspace::geometry_backward(std::size_t i, const PreparedStroke& s, StrokeGrad& g) {
  const std::size_t k0 = k0_[i], cnt = k1_[i] - k0, base = i * n_ + k0;
  if (!s.spline) {
    sx_.resize(cnt);
    sy_.resize(cnt);
    sz_.resize(cnt);
    for (auto* v : {&s0_, &s1_, &s2_, &s3_, &s4_, &s5_}) v->resize(cnt);
    for (std::size_t j = 0; j < cnt; ++j) {
      const Vec3 p = s.to_unit * (x_[k0 + j] - s.translation);
      sx_[j] = p.x;
      sy_[j] = p.y;
      sz_[j] = p.z;
    }
    kernels::active().base_sdf_grad(s.base, s.basic, sx_.data(), sy_.data(), sz_.data(), cnt, s0_.data(),
                                    s1_.data(), s2_.data(), s3_.data(), s4_.data(), s5_.data());
    const Vec3 inv_s{1.0 / s.scale.x, 1.0 / s.scale.y, 1.0 / s.scale.z};
    Vec3 sum_u;
    for (std::size_t j = 0; j < cnt; ++j) {
      const double ga = galpha_[base + j];
      if (ga == 0.0) continue;
      const double ws = ga * dads_[base + j];
      const Vec3 grad{s1_[j], s2_[j], s3_[j]};
      const Vec3 u = hadamard(grad, inv_s);
      const Vec3 q = x_[k0 + j] - s.translation;
      const Vec3 ph{sx_[j], sy_[j], sz_[j]};
      sum_u += u * ws;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) g.rotation_z(a, b) += ws * q[a] * u[b];
      for (int a = 0; a < 3; ++a) g.scale[a] -= ws * grad[a] * ph[a] * inv_s[a];
      g.basic[0] += ws * s4_[j];
      g.basic[1] += ws * s5_[j];
      if (delta_free_[base + j]) {
        const double d = delta_[base + j];
        const double gd = ga * (-dads_[base + j] * sdf_[base + j] / d);
        g.scale[s.min_scale_axis] += gd * (-d / s.scale_correction);
      }
    }
    g.translation -= s.rotation * sum_u;
    return;
  }

  const int K = field_->segments;
  for (std::size_t j = 0; j < cnt; ++j) {
    const double ga = galpha_[base + j];
    if (ga == 0.0) continue;
    const double ws = ga * dads_[base + j];
    const double ts = tstar_[base + j];
    const Vec3& x = x_[k0 + j];
    const auto b = spline_basis(s.curve, ts);
    Vec3 c;
    for (int q = 0; q < s.n_ctrl; ++q) c += s.ctrl[q] * b[q];
    const Vec3 diff = x - c;
    const double dist = norm(diff);
    const Vec3 nrm = dist > 0.0 ? diff * (1.0 / dist) : Vec3{};
    for (int q = 0; q < s.n_ctrl; ++q) g.ctrl[q] -= nrm * (ws * b[q]);
    g.r_a -= ws * (1.0 - ts);
    g.r_b -= ws * ts;
    if (!field_->exact_spline_t) continue;

    const int seg = std::min(static_cast<int>(ts * K), K - 1);
    const double tp = ts * K - seg;
    if (!(tp > 1e-12 && tp < 1.0 - 1e-12)) continue;
    const Vec3& va = s.vertices[seg];
    const Vec3 e = s.vertices[seg + 1] - va;
    const Vec3 w = x - va;
    const double den = dot(e, e);
    if (!(den > 0.0)) continue;
    const Vec3 dta = (-e - w + e * (2.0 * tp)) * (1.0 / den);
    const Vec3 dtb = (w - e * (2.0 * tp)) * (1.0 / den);
    const auto bd = spline_basis_derivative(s.curve, ts);
    Vec3 cp;
    for (int q = 0; q < s.n_ctrl; ++q) cp += s.ctrl[q] * bd[q];
    const double dsdt = -dot(nrm, cp) - (s.r_b - s.r_a);
    const auto b0 = spline_basis(s.curve, static_cast<double>(seg) / K);
    const auto b1 = spline_basis(s.curve, static_cast<double>(seg + 1) / K);
    const double scale = ws * dsdt / K;
    for (int q = 0; q < s.n_ctrl; ++q) g.ctrl[q] += (dta * b0[q] + dtb * b1[q]) * scale;
  }
}

}  // namespace strokefield
