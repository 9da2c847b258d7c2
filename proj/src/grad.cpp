// SPDX-License-Identifier: Apache-2.0
#include "strokefield/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "strokefield/errors.hpp"
#include "strokefield/integrator.hpp"

namespace strokefield {

void RayBatch::validate() const {
  if (rays.empty()) throw DomainError("ray batch is empty");
  if (gt.size() != rays.size() || seeds.size() != rays.size())
    throw ParameterShapeError("ray batch arrays must have one entry per ray");
  if (!mask.empty() && mask.size() != rays.size()) throw ParameterShapeError("mask array must match the ray count");
  if (n_samples < 2) throw DomainError("ray batch needs at least 2 samples per ray");
}

namespace {

constexpr std::size_t kChunk = 64;

struct ChunkResult {
  double color = 0.0, mask = 0.0, err = 0.0, err_reg = 0.0;
  std::vector<StrokeGrad> strokes;
  GridGrad grid;
  std::vector<double> min_abs_sdf, min_margin;
};

void fill_stroke_gradient(const ParamVector& pv, std::size_t i, const PreparedStroke& ps, const StrokeGrad& g,
                          double den_reg_weight, const ReparamConfig& rc, std::vector<double>& out) {
  const std::size_t end = i + 1 < pv.stroke_first_slice.size() ? pv.stroke_first_slice[i + 1] : pv.slices.size();
  for (std::size_t si = pv.stroke_first_slice[i]; si < end; ++si) {
    const ParamSlice& sl = pv.slices[si];
    const std::string_view field = std::string_view(sl.name).substr(sl.name.find('.') + 1);
    std::vector<double> c(sl.size, 0.0);
    if (field == "translation") {
      for (int a = 0; a < 3; ++a) c[a] = g.translation[a];
    } else if (field == "rotation") {
      const Vec3 e = g.euler(ps);
      for (int a = 0; a < 3; ++a) c[a] = e[a];
    } else if (field == "scale") {
      if (sl.size == 1)
        c[0] = g.scale.x + g.scale.y + g.scale.z;
      else
        for (int a = 0; a < 3; ++a) c[a] = g.scale[a];
    } else if (field == "basic") {
      for (std::size_t a = 0; a < sl.size; ++a) c[a] = g.basic[a];
    } else if (field == "control_points") {
      for (std::size_t a = 0; a < sl.size; ++a) c[a] = g.ctrl[a / 3][static_cast<int>(a % 3)];
    } else if (field == "radii") {
      c[0] = g.r_a;
      c[1] = g.r_b;
    } else if (field == "color") {
      for (int a = 0; a < 3; ++a) c[a] = g.color[a];
    } else if (field == "density") {
      c[0] = g.density + den_reg_weight;
    }
    for (std::size_t j = 0; j < sl.size; ++j) {
      const double raw = pv.values[sl.offset + j];
      out[sl.offset + j] = c[j] * reparam_derivative(sl.reparam, raw, rc);
    }
  }
}

GradResult run(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
               const LossConfig& cfg, const std::vector<Rgb>* detached, bool want_grad) {
  batch.validate();
  if (detached && detached->size() != batch.rays.size())
    throw ParameterShapeError("detached colors must have one entry per ray");
  decode_params(params, field, grid, cfg.reparam);
  PreparedField pf = prepare_field(field);
  pf.exact_spline_t = cfg.exact_spline_t;
  const std::size_t m = pf.strokes.size();
  const std::size_t nr = batch.rays.size();

  std::vector<std::optional<Ray>> clipped(nr);
  std::size_t total_samples = 0;
  for (std::size_t r = 0; r < nr; ++r) {
    clipped[r] = clip_ray(batch.rays[r], batch.clip_box);
    if (clipped[r]) total_samples += static_cast<std::size_t>(batch.n_samples);
  }

  const LossWeights& lw = cfg.weights;
  const bool has_mask = !batch.mask.empty();
  const double inv_r = 1.0 / static_cast<double>(nr);
  const double g_e_sample = total_samples && grid ? lw.err_reg / static_cast<double>(total_samples) : 0.0;

  GradResult res;
  res.colors.resize(nr);
  res.opacities.resize(nr);
  res.errors.resize(nr);
  const std::size_t chunks = (nr + kChunk - 1) / kChunk;
  std::vector<ChunkResult> parts(chunks);

  parallel_for(chunks, cfg.threads, [&](std::size_t c) {
    ChunkResult& part = parts[c];
    if (want_grad) part.strokes.assign(m, StrokeGrad{});
    part.min_abs_sdf.assign(m, std::numeric_limits<double>::infinity());
    part.min_margin.assign(m, std::numeric_limits<double>::infinity());
    RayWorkspace ws;
    RaySamples samples;
    const std::size_t end = std::min(nr, (c + 1) * kChunk);
    for (std::size_t r = c * kChunk; r < end; ++r) {
      RayOutput out;
      out.color = pf.background;
      if (clipped[r]) {
        stratified_samples(clipped[r]->t_near, clipped[r]->t_far, batch.n_samples, batch.seeds[r], batch.jitter,
                           samples);
        out = ws.forward(pf, grid, *clipped[r], samples);
        for (std::size_t i = 0; i < m; ++i) {
          part.min_abs_sdf[i] = std::min(part.min_abs_sdf[i], ws.min_abs_sdf(i));
          part.min_margin[i] = std::min(part.min_margin[i], ws.min_argmax_margin(i));
        }
        for (double e : ws.sample_errors()) part.err_reg += e;
      }
      res.colors[r] = out.color;
      res.opacities[r] = out.opacity;
      res.errors[r] = out.error;

      const Rgb diff = out.color - batch.gt[r];
      const double charb = std::sqrt(dot(diff, diff) + cfg.epsilon);
      part.color += charb;
      double g_opacity = 0.0;
      if (has_mask) {
        const double dm = out.opacity - batch.mask[r];
        const double ml = std::sqrt(dm * dm + cfg.epsilon);
        part.mask += ml;
        g_opacity = lw.mask * inv_r * dm / ml;
      }
      double g_error = 0.0;
      if (grid) {
        const Rgb& cref = detached ? (*detached)[r] : out.color;
        const ErrorLoss el = error_losses(out.error, cref, batch.gt[r], cfg.k_err);
        part.err += el.loss;
        g_error = lw.err * inv_r * el.dloss_dE;
      }
      if (want_grad && clipped[r]) {
        const Rgb g_color = diff * (lw.color * inv_r / charb);
        ws.backward(g_color, g_opacity, g_error, g_e_sample, part.strokes, grid ? &part.grid : nullptr);
      }
    }
  });

  LossTerms terms;
  std::vector<StrokeGrad> sg(want_grad ? m : 0);
  res.diagnostics.min_abs_sdf.assign(m, std::numeric_limits<double>::infinity());
  res.diagnostics.min_argmax_margin.assign(m, std::numeric_limits<double>::infinity());
  double err_reg_sum = 0.0;
  for (const ChunkResult& p : parts) {
    terms.color += p.color;
    terms.mask += p.mask;
    terms.err += p.err;
    err_reg_sum += p.err_reg;
    for (std::size_t i = 0; i < m; ++i) {
      if (want_grad) sg[i].add(p.strokes[i]);
      res.diagnostics.min_abs_sdf[i] = std::min(res.diagnostics.min_abs_sdf[i], p.min_abs_sdf[i]);
      res.diagnostics.min_argmax_margin[i] = std::min(res.diagnostics.min_argmax_margin[i], p.min_margin[i]);
    }
  }
  terms.color *= inv_r;
  terms.mask *= inv_r;
  terms.err *= inv_r;
  terms.err_reg = total_samples && grid ? err_reg_sum / static_cast<double>(total_samples) : 0.0;
  terms.den_reg = density_reg(field.strokes);
  res.breakdown = total_loss(terms, lw, has_mask);
  res.loss = res.breakdown.total;
  if (!std::isfinite(res.loss)) throw NonFiniteError("loss is not finite");
  if (!want_grad) return res;

  res.gradient.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i)
    fill_stroke_gradient(params, i, pf.strokes[i], sg[i], lw.den_reg, cfg.reparam, res.gradient);
  if (grid)
    for (const ChunkResult& p : parts)
      for (const auto& [idx, v] : p.grid) res.gradient[params.grid_offset + idx] += v;

  for (std::size_t j = 0; j < res.gradient.size(); ++j)
    if (!std::isfinite(res.gradient[j]))
      throw NonFiniteError("non-finite gradient in parameter slice '" + params.slice_of(j).name + "'");
  return res;
}

}  // namespace

GradResult loss_and_gradients(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
                              const LossConfig& cfg, const std::vector<Rgb>* detached_colors) {
  return run(params, field, grid, batch, cfg, detached_colors, true);
}

GradResult evaluate_loss(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
                         const LossConfig& cfg, const std::vector<Rgb>* detached_colors) {
  return run(params, field, grid, batch, cfg, detached_colors, false);
}

FdReport finite_diff_check(std::span<const double> x, const std::function<double(std::span<const double>)>& f,
                           std::span<const double> analytic, std::span<const std::size_t> subset,
                           const std::function<bool(std::size_t)>& excluded, const FdOptions& opt) {
  if (!(opt.h > 0.0)) throw DomainError("finite-difference step must be positive");
  if (analytic.size() != x.size()) throw ParameterShapeError("analytic gradient size must match the parameters");
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) all[i] = i;
    subset = all;
  }
  std::vector<double> p(x.begin(), x.end());
  auto central = [&](std::size_t i, double h) {
    const double x0 = p[i];
    p[i] = x0 + h;
    const double fp = f(p);
    p[i] = x0 - h;
    const double fm = f(p);
    p[i] = x0;
    return (fp - fm) / (2.0 * h);
  };
  FdReport rep;
  for (std::size_t i : subset) {
    if (i >= x.size()) throw DomainError("finite-difference index out of range");
    if (excluded && excluded(i)) {
      rep.skipped.push_back(i);
      continue;
    }
    const double num = central(i, opt.h);
    if (opt.richardson) {
      const double half = central(i, 0.5 * opt.h);
      if (std::abs(num - half) > opt.richardson_tol * std::abs(num) + 1e-10) {
        rep.skipped.push_back(i);
        continue;
      }
    }
    const double a = analytic[i];
    const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8});
    rep.indices.push_back(i);
    rep.analytic.push_back(a);
    rep.numeric.push_back(num);
    ++rep.checked;
    if (rep.checked == 1 || rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.worst_index = i;
    }
  }
  return rep;
}

FdReport finite_diff_check(const ParamVector& params, StrokeField& field, ErrorGrid* grid, const RayBatch& batch,
                           const LossConfig& cfg, std::span<const std::size_t> subset, const FdOptions& opt) {
  const GradResult base = loss_and_gradients(params, field, grid, batch, cfg);
  const std::vector<Rgb> detached = base.colors;
  ParamVector probe = params;
  auto f = [&](std::span<const double> x) {
    std::copy(x.begin(), x.end(), probe.values.begin());
    return evaluate_loss(probe, field, grid, batch, cfg, &detached).loss;
  };
  const double limit = opt.kink_steps * opt.h;
  const bool max_mode = field.region.composition == Composition::Max;
  auto excluded = [&](std::size_t i) {
    const ParamSlice& sl = params.slice_of(i);
    if (sl.stroke < 0) return false;
    const auto s = static_cast<std::size_t>(sl.stroke);
    if (base.diagnostics.min_abs_sdf[s] < limit) return true;
    return max_mode && base.diagnostics.min_argmax_margin[s] < limit;
  };
  FdReport rep = finite_diff_check(params.values, f, base.gradient, subset, excluded, opt);
  decode_params(params, field, grid, cfg.reparam);
  return rep;
}

}  // namespace strokefield
