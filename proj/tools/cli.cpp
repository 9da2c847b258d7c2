// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <map>
#include <ostream>

#include "strokefield/errors.hpp"
#include "strokefield/gradcheck.hpp"
#include "strokefield/scene_io.hpp"
#include "strokefield/trainer.hpp"

namespace strokefield::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kIo = 2;
constexpr int kGradFail = 3;

// "0-7", "0,2,5" or "1-3,8".
std::vector<std::size_t> parse_index_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  auto number = [&](const std::string& s) {
    std::size_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("bad view list '" + text + "'");
    return v;
  };
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    const std::size_t dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(number(item));
    } else {
      const std::size_t a = number(item.substr(0, dash)), b = number(item.substr(dash + 1));
      if (b < a) throw ConfigError("bad view range '" + item + "'");
      for (std::size_t i = a; i <= b; ++i) out.push_back(i);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct MakeDatasetArgs {
  std::string scene, builtin = "three-spheres", out;
  SyntheticOptions opt;
};

int make_dataset(const MakeDatasetArgs& a, std::ostream& out) {
  AnalyticScene scene;
  if (!a.scene.empty())
    scene = load_scene_spec(a.scene);
  else if (a.builtin == "three-spheres")
    scene = three_sphere_scene();
  else
    throw ConfigError("unknown builtin scene '" + a.builtin + "'");
  const MultiViewDataset ds = generate_synthetic_dataset(scene, a.opt, a.out);
  out << "wrote " << ds.views.size() << " views (" << ds.width << "x" << ds.height << ") to " << a.out << "\n";
  return kOk;
}

struct TrainArgs {
  std::string dataset, config, out, metrics, views;
  std::map<std::string, std::string> overrides;
  bool quiet = false;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  if (!a.config.empty()) cfg = parse_train_config(read_text_file(a.config));
  for (const auto& [k, v] : a.overrides) set_config_value(cfg, k, v);
  cfg.validate();
  const MultiViewDataset ds = load_dataset(a.dataset);
  const std::vector<std::size_t> views = a.views.empty() ? std::vector<std::size_t>{} : parse_index_list(a.views);
  TrainHooks hooks;
  hooks.checkpoint_on_failure = a.out + ".lastgood";
  if (!a.quiet)
    hooks.on_log = [&](const MetricsRow& r) {
      out << "step " << r.step << " loss " << fmt("%.6f", r.loss.total) << " psnr " << fmt("%.2f", r.psnr)
          << " strokes " << r.live_strokes << "\n";
    };
  const TrainResult res = train(ds, cfg, views, hooks);
  save_stroke_field(res.field, res.grid.size() ? &res.grid : nullptr, a.out);
  if (!a.metrics.empty()) write_text_file(a.metrics, metrics_csv(res.metrics));
  out << "saved " << a.out << " (" << res.field.strokes.size() << " strokes, recycled " << res.recycled << ")\n";
  return kOk;
}

struct RenderArgs {
  std::string checkpoint, poses, out_dir = "render";
  int orbit = 8, res = 128, samples = 64, threads = 0;
  double radius = 3.2, elevation = 0.45, angle = 0.8, phase = 0.0;
  std::uint64_t seed = 0;
};

int render_cmd(const RenderArgs& a, std::ostream& out) {
  const Checkpoint cp = load_stroke_field(a.checkpoint);
  std::vector<Mat4> poses;
  double angle = a.angle;
  if (!a.poses.empty()) {
    const MultiViewDataset ds = load_dataset(a.poses);
    angle = ds.camera_angle_x;
    for (const View& v : ds.views) poses.push_back(v.pose);
  } else {
    if (a.orbit < 1) throw ConfigError("--orbit must be at least 1");
    poses = orbit_poses(a.orbit, a.radius, a.elevation, a.phase);
  }
  if (a.res < 1) throw ConfigError("--res must be positive");
  fs::create_directories(a.out_dir);
  RenderSettings rs;
  rs.n_samples = a.samples;
  rs.seed = a.seed;
  rs.threads = a.threads;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    Camera cam;
    cam.width = cam.height = a.res;
    cam.focal = 0.5 * a.res / std::tan(0.5 * angle);
    cam.pose = poses[i];
    const RenderedImage img = render_image(cp.field, cam, rs);
    char name[32];
    std::snprintf(name, sizeof name, "view_%03zu.png", i);
    write_png(fs::path(a.out_dir) / name, img.rgb);
  }
  out << "rendered " << poses.size() << " views into " << a.out_dir << "\n";
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, dataset, views, csv;
  int samples = 64, threads = 0;
  std::uint64_t seed = 0;
};

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const Checkpoint cp = load_stroke_field(a.checkpoint);
  const MultiViewDataset ds = load_dataset(a.dataset);
  std::vector<std::size_t> views = a.views.empty() ? std::vector<std::size_t>{} : parse_index_list(a.views);
  if (views.empty())
    for (std::size_t i = 0; i < ds.views.size(); ++i) views.push_back(i);
  for (std::size_t v : views)
    if (v >= ds.views.size()) throw ConfigError("view " + std::to_string(v) + " not in dataset");
  const EvalResult r = evaluate_views(cp.field, ds, views, a.samples, a.seed, a.threads);
  std::string table = "view,psnr,ssim\n";
  for (std::size_t i = 0; i < views.size(); ++i)
    table += std::to_string(views[i]) + "," + fmt("%.4f", r.per_view_psnr[i]) + "," + fmt("%.5f", r.per_view_ssim[i]) +
             "\n";
  table += "mean," + fmt("%.4f", r.psnr) + "," + fmt("%.5f", r.ssim) + "\n";
  out << table;
  if (!a.csv.empty()) write_text_file(a.csv, table);
  return kOk;
}

struct GradcheckArgs {
  std::string checkpoint;
  std::uint64_t seed = 0;
  double threshold = 1e-3, h = 1e-4;
  int strokes = 5, rays = 16, samples = 64, grid = 16, threads = 0;
};

int gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  GradcheckProblem p;
  if (!a.checkpoint.empty()) {
    Checkpoint cp = load_stroke_field(a.checkpoint);
    p.field = std::move(cp.field);
    if (cp.grid) p.grid = std::move(*cp.grid);
    random_gradcheck_batch(p, a.seed, a.rays, a.samples);
  } else {
    p = random_gradcheck_problem(a.seed, a.strokes, a.grid);
    random_gradcheck_batch(p, a.seed ^ 0x9e3779b97f4a7c15ull, a.rays, a.samples);
  }
  LossConfig lc;
  lc.threads = a.threads;
  FdOptions fo;
  fo.h = a.h;
  const GradcheckSummary s = run_gradcheck(p, lc, fo);
  out << "parameters " << s.parameters << "\nchecked " << s.report.checked << "\nskipped " << s.report.skipped.size()
      << "\nmax_rel_error " << fmt("%.6e", s.report.max_rel_error) << "\nworst " << s.worst_slice << "\n";
  const bool ok = s.report.checked > 0 && s.report.max_rel_error <= a.threshold;
  out << (ok ? "PASS" : "FAIL") << " threshold " << fmt("%g", a.threshold) << "\n";
  return ok ? kOk : kGradFail;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stroke-based radiance field reconstruction", "strokefield"};
  app.require_subcommand(1);

  MakeDatasetArgs md;
  CLI::App* mk = app.add_subcommand("make-dataset", "Render an analytic scene into a multi-view dataset");
  mk->add_option("--scene", md.scene, "Scene spec JSON file")->check(CLI::ExistingFile);
  mk->add_option("--builtin", md.builtin, "Builtin scene when --scene is absent")->capture_default_str();
  mk->add_option("--out", md.out, "Output directory")->required();
  mk->add_option("--views", md.opt.n_views, "Number of orbit views")->capture_default_str();
  mk->add_option("--res", md.opt.resolution, "Image resolution")->capture_default_str();
  mk->add_option("--angle", md.opt.camera_angle_x, "camera_angle_x in radians")->capture_default_str();
  mk->add_option("--radius", md.opt.radius, "Orbit radius")->capture_default_str();
  mk->add_option("--elevation", md.opt.elevation, "Orbit elevation in radians")->capture_default_str();
  mk->add_option("--seed", md.opt.seed, "Azimuth phase seed")->capture_default_str();

  TrainArgs tr;
  CLI::App* tc = app.add_subcommand("train", "Fit a stroke field to a dataset");
  tc->add_option("--dataset", tr.dataset, "Dataset directory")->required();
  tc->add_option("--config", tr.config, "Config file (key = value lines)")->check(CLI::ExistingFile);
  tc->add_option("--out", tr.out, "Checkpoint path")->required();
  tc->add_option("--metrics", tr.metrics, "Metrics CSV path");
  tc->add_option("--train-views", tr.views, "Training views, e.g. 0-7 (default all)");
  tc->add_flag("--quiet", tr.quiet, "No per-step log");
  std::map<std::string, std::string> raw;
  for (std::string_view key : config_keys()) {
    const std::string k(key);
    tc->add_option("--" + k, raw[k], "Config key " + k);
  }

  RenderArgs rd;
  CLI::App* rc = app.add_subcommand("render", "Render a checkpoint from orbit or dataset cameras");
  rc->add_option("--checkpoint", rd.checkpoint, "Checkpoint path")->required();
  rc->add_option("--poses", rd.poses, "Dataset directory whose cameras are used instead of an orbit");
  rc->add_option("--orbit", rd.orbit, "Number of orbit views")->capture_default_str();
  rc->add_option("--res", rd.res, "Image resolution")->capture_default_str();
  rc->add_option("--out", rd.out_dir, "Output directory")->capture_default_str();
  rc->add_option("--samples", rd.samples, "Samples per ray")->capture_default_str();
  rc->add_option("--radius", rd.radius, "Orbit radius")->capture_default_str();
  rc->add_option("--elevation", rd.elevation, "Orbit elevation")->capture_default_str();
  rc->add_option("--angle", rd.angle, "camera_angle_x")->capture_default_str();
  rc->add_option("--phase", rd.phase, "Orbit azimuth phase")->capture_default_str();
  rc->add_option("--seed", rd.seed, "Jitter seed")->capture_default_str();
  rc->add_option("--threads", rd.threads, "Worker threads (0: STROKEFIELD_THREADS or all cores)");

  EvalArgs ev;
  CLI::App* ec = app.add_subcommand("eval", "PSNR/SSIM of a checkpoint against dataset views");
  ec->add_option("--checkpoint", ev.checkpoint, "Checkpoint path")->required();
  ec->add_option("--dataset", ev.dataset, "Dataset directory")->required();
  ec->add_option("--views", ev.views, "Views to evaluate, e.g. 8 or 6-8 (default all)");
  ec->add_option("--csv", ev.csv, "Also write the table here");
  ec->add_option("--samples", ev.samples, "Samples per ray")->capture_default_str();
  ec->add_option("--seed", ev.seed, "Jitter seed")->capture_default_str();
  ec->add_option("--threads", ev.threads, "Worker threads");

  GradcheckArgs gc;
  CLI::App* gcc = app.add_subcommand("gradcheck", "Finite-difference check of the analytic gradients");
  gcc->add_option("--checkpoint", gc.checkpoint, "Check this field instead of a random one");
  gcc->add_option("--seed", gc.seed, "Seed for the random field and rays")->capture_default_str();
  gcc->add_option("--threshold", gc.threshold, "Maximum relative error")->capture_default_str();
  gcc->add_option("--step", gc.h, "Finite-difference step")->capture_default_str();
  gcc->add_option("--strokes", gc.strokes, "Random field size")->capture_default_str();
  gcc->add_option("--rays", gc.rays, "Rays in the batch")->capture_default_str();
  gcc->add_option("--samples", gc.samples, "Samples per ray")->capture_default_str();
  gcc->add_option("--grid", gc.grid, "Error grid resolution (0: none)")->capture_default_str();
  gcc->add_option("--threads", gc.threads, "Worker threads");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (mk->parsed()) return make_dataset(md, out);
    if (tc->parsed()) {
      for (const auto& [k, v] : raw)
        if (tc->count("--" + k)) tr.overrides[k] = v;
      return train_cmd(tr, out);
    }
    if (rc->parsed()) return render_cmd(rd, out);
    if (ec->parsed()) return eval_cmd(ev, out);
    if (gcc->parsed()) return gradcheck_cmd(gc, out);
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  err << app.help();
  return kUsage;
}

}  // namespace strokefield::cli
