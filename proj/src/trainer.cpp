// SPDX-License-Identifier: Apache-2.0
#include "strokefield/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "strokefield/errors.hpp"
#include "strokefield/integrator.hpp"
#include "strokefield/params.hpp"

namespace strokefield {

double stroke_size_for(int live, const TrainConfig& cfg) {
  const int n0 = cfg.resolved_start();
  if (cfg.strokes <= n0) return cfg.size_start;
  // Exponent runs from 0 at the initial count to 1 at N.
  const double e = std::clamp(static_cast<double>(live - n0) / (cfg.strokes - n0), 0.0, 1.0);
  return cfg.size_start * std::pow(cfg.size_end / cfg.size_start, e);
}

ScheduleState schedule_state(int step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.steps) throw DomainError("schedule step outside [0, steps]");
  const double p = static_cast<double>(step) / cfg.steps;
  const double q = std::min(p / cfg.ramp_end, 1.0);
  const int n0 = cfg.resolved_start();
  ScheduleState s;
  s.target_strokes = q >= 1.0 ? cfg.strokes : n0 + static_cast<int>(std::floor((cfg.strokes - n0) * q));
  s.k_delta = cfg.k_delta_start * std::pow(cfg.k_delta_end / cfg.k_delta_start, p);
  s.sample_fraction = q >= 1.0 ? 1.0 : cfg.sample_fraction_start + (1.0 - cfg.sample_fraction_start) * q;
  s.lr = cfg.lr_start * std::pow(cfg.lr_end / cfg.lr_start, p);
  s.stroke_size = stroke_size_for(s.target_strokes, cfg);
  if (step == cfg.steps) {
    s.k_delta = cfg.k_delta_end;
    s.lr = cfg.lr_end;
  }
  return s;
}

AdamW::AdamW(double beta1, double beta2, double eps, double weight_decay)
    : b1_(beta1), b2_(beta2), eps_(eps), wd_(weight_decay) {}

void AdamW::resize(std::size_t n) {
  m_.resize(n, 0.0);
  v_.resize(n, 0.0);
}

void AdamW::insert(std::size_t offset, std::size_t n) {
  m_.insert(m_.begin() + static_cast<std::ptrdiff_t>(offset), n, 0.0);
  v_.insert(v_.begin() + static_cast<std::ptrdiff_t>(offset), n, 0.0);
}

void AdamW::reset(std::size_t offset, std::size_t n) {
  std::fill_n(m_.begin() + static_cast<std::ptrdiff_t>(offset), n, 0.0);
  std::fill_n(v_.begin() + static_cast<std::ptrdiff_t>(offset), n, 0.0);
}

void AdamW::step(std::vector<double>& params, std::span<const double> grads, double lr) {
  step(params, grads, lr, 0, lr);
}

void AdamW::step(std::vector<double>& params, std::span<const double> grads, double lr, std::size_t head,
                 double head_lr) {
  if (params.size() != grads.size() || params.size() != m_.size())
    throw ParameterShapeError("optimizer state, parameters and gradients differ in size");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i])) throw NonFiniteError("non-finite gradient at parameter " + std::to_string(i));
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * g;
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * g * g;
    const double mh = m_[i] / c1, vh = v_[i] / c2;
    params[i] -= (i < head ? head_lr : lr) * (mh / (std::sqrt(vh) + eps_) + wd_ * params[i]);
  }
}

double windowed_mean(std::span<const double> values, std::size_t end, std::size_t window) {
  end = std::min(end, values.size());
  const std::size_t begin = end > window ? end - window : 0;
  if (end == begin) throw DomainError("empty window");
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += values[i];
  return s / static_cast<double>(end - begin);
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "step,total,color,mask,den_reg,err,err_reg,psnr,live_strokes,target_strokes,k_delta,lr,samples\n";
  char buf[512];
  for (const MetricsRow& r : rows) {
    const LossTerms& t = r.loss.terms;
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d,%.17g,%.17g,%d\n", r.step,
                  r.loss.total, t.color, t.mask, t.den_reg, t.err, t.err_reg, r.psnr, r.live_strokes,
                  r.target_strokes, r.k_delta, r.lr, r.samples);
    out += buf;
  }
  return out;
}

namespace {

struct PixelSample {
  Ray ray;
  Rgb gt;
  double mask = 1.0;
};

// Per-stroke raw parameter block, as encode_params would lay it out.
std::vector<double> stroke_raw(const Stroke& s, const StrokeField& like, const ReparamConfig& rc) {
  StrokeField one;
  one.region = like.region;
  one.spline_segments = like.spline_segments;
  one.strokes.push_back(s);
  return encode_params(one, nullptr, rc).values;
}

std::pair<std::size_t, std::size_t> stroke_range(const ParamVector& pv, std::size_t i) {
  const std::size_t begin = pv.slices[pv.stroke_first_slice[i]].offset;
  const std::size_t end =
      i + 1 < pv.stroke_first_slice.size() ? pv.slices[pv.stroke_first_slice[i + 1]].offset : pv.values.size();
  return {begin, end};
}

// Mean ground-truth color of the 3x3 patch the point projects to in a random view.
Rgb patch_color(const MultiViewDataset& ds, std::span<const std::size_t> views, const Vec3& p, std::mt19937_64& rng) {
  const std::size_t v = views[static_cast<std::size_t>(rng() % views.size())];
  const Camera cam = ds.camera(v);
  Mat4 inv;
  if (!invert(cam.pose, inv)) return {0.5, 0.5, 0.5};
  const Vec3 pc = inv.transform_point(p);
  if (pc.z >= -1e-9) return {0.5, 0.5, 0.5};
  const double px = cam.focal * (pc.x / -pc.z) + 0.5 * cam.width - 0.5;
  const double py = -cam.focal * (pc.y / -pc.z) + 0.5 * cam.height - 0.5;
  const int cx = static_cast<int>(std::lround(px)), cy = static_cast<int>(std::lround(py));
  Rgb sum;
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = cx + dx, y = cy + dy;
      if (x < 0 || y < 0 || x >= cam.width || y >= cam.height) continue;
      sum += ds.views[v].rgb.rgb(x, y);
      ++n;
    }
  if (n == 0) return {0.5, 0.5, 0.5};
  const Rgb c = sum * (1.0 / n);
  // Keep the logistic color parameterization away from saturation.
  return {std::clamp(c.x, 0.02, 0.98), std::clamp(c.y, 0.02, 0.98), std::clamp(c.z, 0.02, 0.98)};
}

}  // namespace

TrainResult train(const MultiViewDataset& ds, const TrainConfig& cfg, std::span<const std::size_t> train_views,
                  const TrainHooks& hooks) {
  cfg.validate();
  ds.validate();
  std::vector<std::size_t> views(train_views.begin(), train_views.end());
  if (views.empty())
    for (std::size_t i = 0; i < ds.views.size(); ++i) views.push_back(i);
  if (views.empty()) throw DomainError("training needs at least one view");
  for (std::size_t v : views)
    if (v >= ds.views.size()) throw DomainError("training view index out of range");

  const bool masks = ds.has_masks();
  std::vector<PixelSample> pixels;
  for (std::size_t v : views) {
    for (const PixelRay& pr : generate_rays(ds.camera(v))) {
      PixelSample s;
      s.ray = pr.ray;
      s.gt = ds.views[v].rgb.rgb(pr.px, pr.py);
      if (masks) s.mask = ds.views[v].mask->at(pr.px, pr.py, 0);
      pixels.push_back(s);
    }
  }

  std::mt19937_64 rng(cfg.seed);
  const StrokeKind kind = StrokeKind::from_name(cfg.stroke_kind);
  const double diag = ds.bbox.diagonal();
  ReparamConfig rc;

  TrainResult res;
  StrokeField& field = res.field;
  field.region.k_delta = cfg.k_delta_start;
  field.region.delta_mode = cfg.delta_mode;
  field.region.composition = cfg.composition;
  field.region.tau = cfg.tau;
  field.background = ds.background;
  if (cfg.error_field) {
    const int r = cfg.grid_resolution;
    res.grid = ErrorGrid({r, r, r}, ds.bbox, cfg.grid_init);
  }
  ErrorGrid* grid = cfg.error_field ? &res.grid : nullptr;

  auto make_stroke = [&](int live) {
    const Vec3 pos = grid ? propose_position(*grid, cfg.proposal_samples, rng) : uniform_position(ds.bbox, rng);
    StrokeInit init;
    init.density = cfg.init_density;
    init.color = patch_color(ds, views, pos, rng);
    return initialize_stroke(kind, pos, 0.5 * stroke_size_for(live, cfg) * diag, init, rng);
  };

  const int n0 = cfg.resolved_start();
  for (int i = 0; i < n0; ++i) field.strokes.push_back(make_stroke(n0));
  std::vector<int> ages(field.strokes.size(), 0);

  ParamVector pv = encode_params(field, grid, rc);
  AdamW adam(cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
  adam.resize(pv.size());

  LossConfig lc;
  lc.weights = cfg.weights;
  if (!grid) lc.weights.err = lc.weights.err_reg = 0.0;
  lc.epsilon = cfg.epsilon;
  lc.k_err = cfg.k_err;
  lc.reparam = rc;
  lc.threads = cfg.threads;

  RayBatch batch;
  batch.clip_box = ds.bbox;
  batch.jitter = true;
  const std::size_t nb = static_cast<std::size_t>(cfg.batch_rays);
  batch.rays.resize(nb);
  batch.gt.resize(nb);
  batch.seeds.resize(nb);
  if (masks) batch.mask.resize(nb);
  const std::uint64_t jitter_seed = mix_seed(cfg.seed, 0x6a09e667f3bcc908ull);

  for (int step = 0; step < cfg.steps; ++step) {
    const ScheduleState s = schedule_state(step, cfg);
    field.region.k_delta = s.k_delta;
    batch.n_samples = std::max(2, static_cast<int>(std::lround(s.sample_fraction * cfg.n_samples)));
    for (std::size_t r = 0; r < nb; ++r) {
      const PixelSample& px = pixels[static_cast<std::size_t>(rng() % pixels.size())];
      batch.rays[r] = px.ray;
      batch.gt[r] = px.gt;
      if (masks) batch.mask[r] = px.mask;
      batch.seeds[r] = mix_seed(jitter_seed, static_cast<std::uint64_t>(step) * nb + r);
    }

    GradResult g;
    try {
      g = loss_and_gradients(pv, field, grid, batch, lc);
      adam.step(pv.values, g.gradient, s.lr, pv.grid_size, cfg.grid_lr > 0.0 ? cfg.grid_lr : s.lr);
    } catch (const NonFiniteError&) {
      if (!hooks.checkpoint_on_failure.empty()) {
        decode_params(pv, field, grid, rc);
        save_stroke_field(field, grid, hooks.checkpoint_on_failure);
      }
      throw;
    }
    decode_params(pv, field, grid, rc);
    res.loss_history.push_back(g.loss);
    for (int& a : ages) ++a;

    if (cfg.recycle_interval > 0 && (step + 1) % cfg.recycle_interval == 0 && step + 1 < cfg.steps) {
      const double size = 0.5 * stroke_size_for(static_cast<int>(field.strokes.size()), cfg) * diag;
      StrokeInit init;
      init.density = cfg.init_density;
      const std::vector<int> before = ages;
      res.recycled += recycle_dead_strokes(
          field, ages, cfg.recycle_density, cfg.recycle_min_age, size, init, rng,
          [&](std::mt19937_64& r) {
            return grid ? propose_position(*grid, cfg.proposal_samples, r) : uniform_position(ds.bbox, r);
          },
          [&](const Vec3& p, std::mt19937_64& r) { return patch_color(ds, views, p, r); });
      for (std::size_t i = 0; i < ages.size(); ++i) {
        if (ages[i] != 0 || before[i] == 0) continue;
        const auto [b, e] = stroke_range(pv, i);
        const auto raw = stroke_raw(field.strokes[i], field, rc);
        std::copy(raw.begin(), raw.end(), pv.values.begin() + static_cast<std::ptrdiff_t>(b));
        adam.reset(b, e - b);
      }
    }

    const int target = schedule_state(step + 1, cfg).target_strokes;
    while (static_cast<int>(field.strokes.size()) < target) {
      const int live = static_cast<int>(field.strokes.size()) + 1;
      field.strokes.push_back(make_stroke(live));
      ages.push_back(0);
      const auto raw = stroke_raw(field.strokes.back(), field, rc);
      const std::size_t at = pv.values.size();
      std::vector<double> values = std::move(pv.values);
      values.insert(values.end(), raw.begin(), raw.end());
      pv = param_layout(field, grid ? grid->size() : 0);
      pv.values = std::move(values);
      adam.insert(at, raw.size());
    }

    if ((cfg.log_interval > 0 && step % cfg.log_interval == 0) || step + 1 == cfg.steps) {
      MetricsRow row;
      row.step = step;
      row.loss = g.breakdown;
      double se = 0.0;
      for (std::size_t r = 0; r < nb; ++r) {
        const Rgb d = g.colors[r] - batch.gt[r];
        se += dot(d, d);
      }
      const double mse = se / (3.0 * static_cast<double>(nb));
      row.psnr = mse < 1e-10 ? 99.0 : std::min(99.0, 10.0 * std::log10(1.0 / mse));
      row.live_strokes = static_cast<int>(field.strokes.size());
      row.target_strokes = target;
      row.k_delta = s.k_delta;
      row.lr = s.lr;
      row.samples = batch.n_samples;
      res.metrics.push_back(row);
      if (hooks.on_log) hooks.on_log(row);
    }
  }
  field.region.k_delta = schedule_state(cfg.steps, cfg).k_delta;
  return res;
}

EvalResult evaluate_views(const StrokeField& field, const MultiViewDataset& ds, std::span<const std::size_t> views,
                          int n_samples, std::uint64_t seed, int threads) {
  EvalResult out;
  if (views.empty()) throw DomainError("no views to evaluate");
  RenderSettings rs;
  rs.n_samples = n_samples;
  rs.seed = seed;
  rs.clip_box = ds.bbox;
  rs.threads = threads;
  for (std::size_t v : views) {
    const RenderedImage img = render_image(field, ds.camera(v), rs);
    out.per_view_psnr.push_back(psnr(img.rgb, ds.views.at(v).rgb));
    out.per_view_ssim.push_back(ssim(img.rgb, ds.views.at(v).rgb));
  }
  for (std::size_t i = 0; i < views.size(); ++i) {
    out.psnr += out.per_view_psnr[i] / static_cast<double>(views.size());
    out.ssim += out.per_view_ssim[i] / static_cast<double>(views.size());
  }
  return out;
}

}  // namespace strokefield
