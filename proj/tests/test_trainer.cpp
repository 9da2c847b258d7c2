// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "strokefield/errors.hpp"
#include "strokefield/trainer.hpp"

using namespace strokefield;

namespace {

MultiViewDataset constant_view(const Rgb& color, int res) {
  MultiViewDataset ds;
  ds.width = ds.height = res;
  View v;
  v.file_path = "./r_0";
  v.rgb = Image(res, res, 3);
  for (int y = 0; y < res; ++y)
    for (int x = 0; x < res; ++x) v.rgb.set_rgb(x, y, color);
  v.pose = look_at({0.0, -3.2, 0.0}, {0.0, 0.0, 0.0});
  ds.views.push_back(std::move(v));
  return ds;
}

}  // namespace

TEST_CASE("AdamW basics") {
  AdamW opt(0.9, 0.99, 1e-8, 0.0);
  std::vector<double> p{1.0, -2.0, 3.0};
  opt.resize(p.size());
  const std::vector<double> before = p;
  opt.step(p, std::vector<double>{0.0, 0.0, 0.0}, 0.01);
  CHECK(p == before);

  AdamW first(0.9, 0.99, 1e-8, 0.0);
  std::vector<double> q{0.0, 0.0, 0.0};
  first.resize(3);
  first.step(q, std::vector<double>{0.5, -3.0, 100.0}, 0.01);
  CHECK(std::abs(q[0] + 0.01) < 1e-6);
  CHECK(std::abs(q[1] - 0.01) < 1e-6);
  CHECK(std::abs(q[2] + 0.01) < 1e-6);

  // Leading block on its own rate.
  AdamW split(0.9, 0.99, 1e-8, 0.0);
  std::vector<double> h{0.0, 0.0, 0.0};
  split.resize(3);
  split.step(h, std::vector<double>{1.0, 1.0, 1.0}, 0.01, 2, 0.1);
  CHECK(std::abs(h[0] + 0.1) < 1e-6);
  CHECK(std::abs(h[1] + 0.1) < 1e-6);
  CHECK(std::abs(h[2] + 0.01) < 1e-6);

  std::vector<double> r = q;
  CHECK_THROWS_AS(first.step(r, std::vector<double>{0.0, std::numeric_limits<double>::quiet_NaN(), 0.0}, 0.01),
                  NonFiniteError);
  CHECK(r == q);

  AdamW decay(0.9, 0.99, 1e-8, 0.1);
  std::vector<double> w{2.0};
  decay.resize(1);
  decay.step(w, std::vector<double>{0.0}, 0.01);
  CHECK(w[0] == doctest::Approx(2.0 * (1.0 - 0.01 * 0.1)));

  first.insert(1, 2);
  CHECK(first.size() == 5);
  CHECK(first.first_moment()[1] == 0.0);
  CHECK(first.first_moment()[3] != 0.0);
  first.reset(3, 2);
  CHECK(first.first_moment()[3] == 0.0);
}

TEST_CASE("schedule endpoints") {
  TrainConfig cfg;
  cfg.strokes = 60;
  cfg.steps = 2000;
  const ScheduleState s0 = schedule_state(0, cfg);
  CHECK(s0.target_strokes == 6);
  CHECK(s0.k_delta == doctest::Approx(7.0));
  CHECK(s0.sample_fraction == doctest::Approx(0.25));
  CHECK(s0.stroke_size == doctest::Approx(cfg.size_start));
  CHECK(s0.lr == doctest::Approx(0.01));

  const ScheduleState s1 = schedule_state(2000, cfg);
  CHECK(s1.target_strokes == 60);
  CHECK(s1.k_delta == doctest::Approx(1.0));
  CHECK(s1.sample_fraction == doctest::Approx(1.0));
  CHECK(s1.stroke_size == doctest::Approx(cfg.size_end));
  CHECK(s1.lr == doctest::Approx(0.0003));

  const ScheduleState s80 = schedule_state(1600, cfg);
  CHECK(s80.sample_fraction == doctest::Approx(1.0));
  CHECK(s80.target_strokes == 60);
  // Log-linear k_delta: the midpoint is the geometric mean.
  CHECK(schedule_state(1000, cfg).k_delta == doctest::Approx(std::sqrt(7.0)));
  CHECK(schedule_state(1000, cfg).lr == doctest::Approx(std::sqrt(0.01 * 0.0003)));

  int prev_n = 0;
  double prev_k = 1e9, prev_f = 0.0, prev_size = 1e9;
  for (int s = 0; s <= 2000; s += 10) {
    const ScheduleState st = schedule_state(s, cfg);
    CHECK(st.target_strokes >= prev_n);
    CHECK(st.k_delta <= prev_k);
    CHECK(st.sample_fraction >= prev_f);
    CHECK(st.stroke_size <= prev_size);
    prev_n = st.target_strokes;
    prev_k = st.k_delta;
    prev_f = st.sample_fraction;
    prev_size = st.stroke_size;
  }
  CHECK_THROWS_AS(schedule_state(-1, cfg), DomainError);
  CHECK_THROWS_AS(schedule_state(2001, cfg), DomainError);
}

TEST_CASE("config text round trip and validation") {
  TrainConfig cfg;
  cfg.strokes = 17;
  cfg.lr_start = 0.1 / 3.0;
  cfg.error_field = false;
  cfg.composition = Composition::Softmax;
  cfg.delta_mode = DeltaMode::Reciprocal;
  cfg.stroke_kind = "cubic_bezier";
  cfg.seed = 12345678901234ULL;
  const std::string text = format_train_config(cfg);
  const TrainConfig back = parse_train_config(text);
  CHECK(format_train_config(back) == text);
  CHECK(back.lr_start == cfg.lr_start);
  CHECK(back.seed == cfg.seed);

  const TrainConfig c2 = parse_train_config("# comment\n\nsteps = 42\n  lambda_mask=0.5  \n");
  CHECK(c2.steps == 42);
  CHECK(c2.weights.mask == 0.5);
  CHECK_THROWS_AS(parse_train_config("stepz = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("steps = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("steps 3\n"), ConfigError);
  TrainConfig bad;
  bad.strokes_start = 100;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.grid_lr = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = TrainConfig{};
  bad.stroke_kind = "blob";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == config_keys().size());
  for (std::string_view k : config_keys()) CHECK_NOTHROW(get_config_value(cfg, k));
}

TEST_CASE("windowed mean") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6};
  CHECK(windowed_mean(v, 6, 2) == 5.5);
  CHECK(windowed_mean(v, 3, 10) == 2.0);
}

TEST_CASE("single stroke fits a constant-color view") {
  const Rgb color{0.2, 0.6, 0.4};
  const MultiViewDataset ds = constant_view(color, 16);
  TrainConfig cfg;
  cfg.strokes = 1;
  cfg.steps = 500;
  cfg.batch_rays = 64;
  cfg.n_samples = 32;
  cfg.proposal_samples = 64;
  cfg.grid_resolution = 8;
  cfg.log_interval = 25;
  cfg.seed = 3;
  cfg.stroke_kind = "aa_box";
  int logged = 0;
  TrainHooks hooks;
  hooks.on_log = [&](const MetricsRow& row) {
    ++logged;
    CHECK(row.live_strokes == row.target_strokes);
  };
  const TrainResult r = train(ds, cfg, {}, hooks);
  CHECK(logged > 0);
  CHECK(r.field.strokes.size() == 1);
  CHECK(r.loss_history.size() == 500);
  const std::size_t view = 0;
  const EvalResult e = evaluate_views(r.field, ds, std::span<const std::size_t>(&view, 1), 64, 0, 1);
  CHECK(e.psnr > 30.0);
}

TEST_CASE("live stroke count follows the schedule") {
  const MultiViewDataset ds = constant_view({0.8, 0.3, 0.3}, 8);
  TrainConfig cfg;
  cfg.strokes = 12;
  cfg.steps = 120;
  cfg.batch_rays = 16;
  cfg.n_samples = 8;
  cfg.proposal_samples = 16;
  cfg.grid_resolution = 4;
  cfg.log_interval = 1;
  std::vector<MetricsRow> rows;
  TrainHooks hooks;
  hooks.on_log = [&](const MetricsRow& row) { rows.push_back(row); };
  const TrainResult r = train(ds, cfg, {}, hooks);
  REQUIRE(rows.size() >= 100);
  for (const MetricsRow& row : rows) {
    CHECK(row.live_strokes == row.target_strokes);
    // Rows are logged after the end-of-step insertion.
    CHECK(row.target_strokes == schedule_state(row.step + 1, cfg).target_strokes);
  }
  CHECK(r.field.strokes.size() == 12);
  const std::string csv = metrics_csv(r.metrics);
  CHECK(csv.rfind("step,", 0) == 0);
}

TEST_CASE("invalid training inputs") {
  MultiViewDataset empty;
  CHECK_THROWS(train(empty, TrainConfig{}));
  TrainConfig bad;
  bad.steps = 0;
  CHECK_THROWS_AS(train(constant_view({0, 0, 0}, 4), bad), ConfigError);
}
