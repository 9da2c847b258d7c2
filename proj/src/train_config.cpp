// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "strokefield/errors.hpp"
#include "strokefield/trainer.hpp"

namespace strokefield {

void TrainConfig::validate() const {
  if (strokes < 1) throw ConfigError("strokes must be at least 1");
  if (strokes_start < 0 || strokes_start > strokes) throw ConfigError("strokes_start must be in [0, strokes]");
  if (steps < 1) throw ConfigError("steps must be positive");
  if (batch_rays < 1) throw ConfigError("batch_rays must be positive");
  if (n_samples < 2) throw ConfigError("n_samples must be at least 2");
  for (double w : {weights.color, weights.mask, weights.den_reg, weights.err, weights.err_reg})
    if (!(w >= 0.0)) throw ConfigError("loss weights must be non-negative");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(k_err > 1.0)) throw ConfigError("k_err must exceed 1");
  if (!(k_delta_start > 0.0 && k_delta_end > 0.0)) throw ConfigError("k_delta endpoints must be positive");
  if (!(lr_start > 0.0 && lr_end > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must be in [0, 1)");
  if (!(adam_eps > 0.0) || !(weight_decay >= 0.0)) throw ConfigError("adam_eps > 0 and weight_decay >= 0 required");
  if (!(sample_fraction_start > 0.0 && sample_fraction_start <= 1.0))
    throw ConfigError("sample_fraction_start must be in (0, 1]");
  if (!(ramp_end > 0.0 && ramp_end <= 1.0)) throw ConfigError("ramp_end must be in (0, 1]");
  if (!(size_start > 0.0 && size_end > 0.0)) throw ConfigError("stroke sizes must be positive");
  if (proposal_samples < 1) throw ConfigError("proposal_samples must be positive");
  if (grid_resolution < 1) throw ConfigError("grid_resolution must be positive");
  if (!(grid_lr >= 0.0)) throw ConfigError("grid_lr must be non-negative");
  if (recycle_interval < 0 || recycle_min_age < 0) throw ConfigError("recycle settings must be non-negative");
  if (!(init_density > 0.0)) throw ConfigError("init_density must be positive");
  if (composition == Composition::Softmax && !(tau > 0.0)) throw ConfigError("tau must be positive");
  try {
    (void)StrokeKind::from_name(stroke_kind);
  } catch (const UnknownKindError& e) {
    throw ConfigError(e.what());
  }
}

int TrainConfig::resolved_start() const { return strokes_start > 0 ? strokes_start : std::max(1, strokes / 10); }

namespace {

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("bad value '" + std::string(v) + "' for " + std::string(key));
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Key {
  std::string_view name;
  std::function<void(TrainConfig&, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <class T>
Key number(std::string_view name, T TrainConfig::*member) {
  return {name, [name, member](TrainConfig& c, std::string_view v) { c.*member = parse_number<T>(name, v); },
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format_double(c.*member);
            else
              return std::to_string(c.*member);
          }};
}

Key weight(std::string_view name, double LossWeights::*member) {
  return {name, [name, member](TrainConfig& c, std::string_view v) { c.weights.*member = parse_number<double>(name, v); },
          [member](const TrainConfig& c) { return format_double(c.weights.*member); }};
}

Key flag(std::string_view name, bool TrainConfig::*member) {
  return {name,
          [name, member](TrainConfig& c, std::string_view v) {
            if (v == "true" || v == "1" || v == "on")
              c.*member = true;
            else if (v == "false" || v == "0" || v == "off")
              c.*member = false;
            else
              throw ConfigError("bad boolean '" + std::string(v) + "' for " + std::string(name));
          },
          [member](const TrainConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      number("strokes", &TrainConfig::strokes),
      number("strokes_start", &TrainConfig::strokes_start),
      number("steps", &TrainConfig::steps),
      number("batch_rays", &TrainConfig::batch_rays),
      number("n_samples", &TrainConfig::n_samples),
      weight("lambda_color", &LossWeights::color),
      weight("lambda_mask", &LossWeights::mask),
      weight("lambda_den_reg", &LossWeights::den_reg),
      weight("lambda_err", &LossWeights::err),
      weight("lambda_err_reg", &LossWeights::err_reg),
      number("epsilon", &TrainConfig::epsilon),
      number("k_err", &TrainConfig::k_err),
      number("k_delta_start", &TrainConfig::k_delta_start),
      number("k_delta_end", &TrainConfig::k_delta_end),
      number("lr_start", &TrainConfig::lr_start),
      number("lr_end", &TrainConfig::lr_end),
      number("beta1", &TrainConfig::beta1),
      number("beta2", &TrainConfig::beta2),
      number("adam_eps", &TrainConfig::adam_eps),
      number("weight_decay", &TrainConfig::weight_decay),
      number("sample_fraction_start", &TrainConfig::sample_fraction_start),
      number("ramp_end", &TrainConfig::ramp_end),
      number("size_start", &TrainConfig::size_start),
      number("size_end", &TrainConfig::size_end),
      number("proposal_samples", &TrainConfig::proposal_samples),
      flag("error_field", &TrainConfig::error_field),
      number("grid_resolution", &TrainConfig::grid_resolution),
      number("grid_init", &TrainConfig::grid_init),
      number("grid_lr", &TrainConfig::grid_lr),
      number("recycle_density", &TrainConfig::recycle_density),
      number("recycle_interval", &TrainConfig::recycle_interval),
      number("recycle_min_age", &TrainConfig::recycle_min_age),
      number("init_density", &TrainConfig::init_density),
      {"stroke_kind", [](TrainConfig& c, std::string_view v) { c.stroke_kind = std::string(v); },
       [](const TrainConfig& c) { return c.stroke_kind; }},
      {"delta_mode",
       [](TrainConfig& c, std::string_view v) {
         const auto m = delta_mode_from_name(v);
         if (!m) throw ConfigError("unknown delta_mode '" + std::string(v) + "'");
         c.delta_mode = *m;
       },
       [](const TrainConfig& c) { return std::string(delta_mode_name(c.delta_mode)); }},
      {"composition",
       [](TrainConfig& c, std::string_view v) {
         const auto m = composition_from_name(v);
         if (!m) throw ConfigError("unknown composition '" + std::string(v) + "'");
         c.composition = *m;
       },
       [](const TrainConfig& c) { return std::string(composition_name(c.composition)); }},
      number("tau", &TrainConfig::tau),
      number("seed", &TrainConfig::seed),
      number("threads", &TrainConfig::threads),
      number("log_interval", &TrainConfig::log_interval),
  };
  return table;
}

const Key& find_key(std::string_view key) {
  for (const Key& k : keys())
    if (k.name == key) return k;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::span<const std::string_view> config_keys() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> n;
    for (const Key& k : keys()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
  find_key(key).set(cfg, trim(value));
}

std::string get_config_value(const TrainConfig& cfg, std::string_view key) { return find_key(key).get(cfg); }

TrainConfig parse_train_config(std::string_view text, TrainConfig base) {
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const std::size_t e = text.find('\n', pos);
    const std::string_view line = trim(text.substr(pos, e == std::string_view::npos ? std::string_view::npos : e - pos));
    pos = e == std::string_view::npos ? text.size() + 1 : e + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return base;
}

std::string format_train_config(const TrainConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) {
    out += k.name;
    out += " = ";
    out += k.get(cfg);
    out += '\n';
  }
  return out;
}

}  // namespace strokefield
