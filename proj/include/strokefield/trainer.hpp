// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "strokefield/error_field.hpp"
#include "strokefield/field.hpp"
#include "strokefield/grad.hpp"
#include "strokefield/losses.hpp"
#include "strokefield/scene_io.hpp"

namespace strokefield {

struct TrainConfig {
  int strokes = 60;        // N
  int strokes_start = 0;   // 0: max(1, N / 10)
  int steps = 2000;
  int batch_rays = 512;
  int n_samples = 64;      // per ray once the sample fraction reaches 1

  LossWeights weights;
  double epsilon = 1e-6;
  double k_err = 4.0;

  double k_delta_start = 7.0;
  double k_delta_end = 1.0;
  double lr_start = 0.01;
  double lr_end = 0.0003;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double sample_fraction_start = 0.25;
  double ramp_end = 0.8;   // fraction of training where counts and sample fraction saturate
  double size_start = 0.25;  // fractions of the bbox diagonal
  double size_end = 0.04;

  int proposal_samples = 4096;  // M
  bool error_field = true;    // false: uniform random stroke placement
  int grid_resolution = 64;
  double grid_init = -3.0;    // initial raw error value
  double grid_lr = 0.1;       // constant error-grid learning rate; 0 follows the stroke schedule
  double recycle_density = 0.05;
  int recycle_interval = 500;
  int recycle_min_age = 200;
  double init_density = 10.0;

  std::string stroke_kind = "ellipsoid";
  DeltaMode delta_mode = DeltaMode::Footprint;
  Composition composition = Composition::Overlay;
  double tau = 0.1;

  std::uint64_t seed = 0;
  int threads = 0;
  int log_interval = 50;

  void validate() const;
  int resolved_start() const;
};

/// Every configuration key, in declaration order.
std::span<const std::string_view> config_keys();

/// Sets one key from its text form. Throws ConfigError for unknown keys or bad values.
void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const TrainConfig& cfg, std::string_view key);

/// `key = value` lines; blank lines and lines starting with '#' are ignored.
TrainConfig parse_train_config(std::string_view text, TrainConfig base = {});
std::string format_train_config(const TrainConfig& cfg);

struct ScheduleState {
  int target_strokes = 0;
  double k_delta = 0.0;
  double sample_fraction = 0.0;
  double stroke_size = 0.0;  // fraction of the bbox diagonal for the next inserted stroke
  double lr = 0.0;
};

/// Schedules at `step` in [0, steps]. The stroke size follows the current target count.
ScheduleState schedule_state(int step, const TrainConfig& cfg);

/// size_start * (size_end / size_start)^(live / N)
double stroke_size_for(int live, const TrainConfig& cfg);

/// Decoupled weight decay Adam over a flat parameter vector.
class AdamW {
 public:
  AdamW(double beta1, double beta2, double eps, double weight_decay);

  /// Applies one update; throws NonFiniteError (leaving params untouched) when a
  /// gradient is not finite.
  void step(std::vector<double>& params, std::span<const double> grads, double lr);
  /// The first `head` parameters use `head_lr` instead of `lr`.
  void step(std::vector<double>& params, std::span<const double> grads, double lr, std::size_t head, double head_lr);

  /// Moment vectors follow the parameter layout; `reset` zeroes [offset, offset+n).
  void resize(std::size_t n);
  void insert(std::size_t offset, std::size_t n);
  void reset(std::size_t offset, std::size_t n);

  std::size_t size() const { return m_.size(); }
  long long steps() const { return t_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }

 private:
  double b1_, b2_, eps_, wd_;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

struct MetricsRow {
  int step = 0;
  LossBreakdown loss;
  double psnr = 0.0;  // over the batch rays
  int live_strokes = 0;
  int target_strokes = 0;
  double k_delta = 0.0;
  double lr = 0.0;
  int samples = 0;
};

struct TrainResult {
  StrokeField field;
  ErrorGrid grid;  // empty (size 0) when the error field is disabled
  std::vector<double> loss_history;  // total loss per step
  std::vector<MetricsRow> metrics;
  int recycled = 0;
};

struct TrainHooks {
  std::function<void(const MetricsRow&)> on_log;
  std::filesystem::path checkpoint_on_failure;  // last good state is written here on a non-finite step
};

/// Reconstructs the dataset views listed in `train_views` (all when empty).
TrainResult train(const MultiViewDataset& dataset, const TrainConfig& cfg, std::span<const std::size_t> train_views = {},
                  const TrainHooks& hooks = {});

std::string metrics_csv(std::span<const MetricsRow> rows);

/// Mean of the last `window` entries ending at index `end` (exclusive).
double windowed_mean(std::span<const double> values, std::size_t end, std::size_t window);

/// Renders every listed view at the dataset resolution; returns mean PSNR and SSIM.
struct EvalResult {
  double psnr = 0.0;
  double ssim = 0.0;
  std::vector<double> per_view_psnr;
  std::vector<double> per_view_ssim;
};
EvalResult evaluate_views(const StrokeField& field, const MultiViewDataset& dataset, std::span<const std::size_t> views,
                          int n_samples = 64, std::uint64_t seed = 0, int threads = 0);

}  // namespace strokefield
