// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <random>

#include "doctest.h"
#include "strokefield/errors.hpp"
#include "strokefield/scene_io.hpp"
#include "test_util.hpp"

using namespace strokefield;
using namespace sftest;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  const fs::path p = fs::temp_directory_path() / ("strokefield_test_" + std::string(name));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Image constant(int w, int h, double v) { return Image(w, h, 3, v); }

StrokeField mixed_field(std::mt19937_64& rng) {
  StrokeField f;
  f.region.k_delta = 2.75;
  f.region.delta_mode = DeltaMode::Footprint;
  f.region.composition = Composition::Softmax;
  f.region.tau = 0.0625;
  f.background = {0.1, 0.2, 0.3};
  f.spline_segments = 24;
  const PrimitiveKind prims[] = {PrimitiveKind::Sphere,    PrimitiveKind::OrientedBox, PrimitiveKind::RoundBox,
                                 PrimitiveKind::Line,      PrimitiveKind::Triprism,    PrimitiveKind::Tetrahedron,
                                 PrimitiveKind::Ellipsoid};
  for (PrimitiveKind k : prims) f.strokes.emplace_back(random_primitive(rng, k));
  for (SplineKind k : kAllSplineKinds) f.strokes.emplace_back(random_spline(rng, k));
  return f;
}

void check_same_fields(const StrokeField& a, const StrokeField& b) {
  CHECK(serialize_checkpoint(a, nullptr) == serialize_checkpoint(b, nullptr));
  REQUIRE(a.strokes.size() == b.strokes.size());
  for (std::size_t i = 0; i < a.strokes.size(); ++i) {
    CHECK(same_bits(stroke_density(a.strokes[i]), stroke_density(b.strokes[i])));
    for (int c = 0; c < 3; ++c) CHECK(same_bits(stroke_color(a.strokes[i])[c], stroke_color(b.strokes[i])[c]));
    if (const auto* p = std::get_if<PrimitiveStroke>(&a.strokes[i])) {
      const auto& q = std::get<PrimitiveStroke>(b.strokes[i]);
      CHECK(p->kind == q.kind);
      CHECK(p->basic == q.basic);
      CHECK(p->transform.translation == q.transform.translation);
      CHECK(p->transform.rotation == q.transform.rotation);
      CHECK(p->transform.scale == q.transform.scale);
    } else {
      const auto& s = std::get<SplineStroke>(a.strokes[i]);
      const auto& t = std::get<SplineStroke>(b.strokes[i]);
      CHECK(s.kind == t.kind);
      CHECK(s.control_points == t.control_points);
      CHECK(same_bits(s.r_a, t.r_a));
      CHECK(same_bits(s.r_b, t.r_b));
    }
  }
  CHECK(a.region.k_delta == b.region.k_delta);
  CHECK(a.region.delta_mode == b.region.delta_mode);
  CHECK(a.region.composition == b.region.composition);
  CHECK(a.region.tau == b.region.tau);
  CHECK(a.background == b.background);
  CHECK(a.spline_segments == b.spline_segments);
}

}  // namespace

TEST_CASE("metrics") {
  const Image a = constant(16, 16, 0.5), b = constant(16, 16, 0.0);
  CHECK(psnr(a, a) == 99.0);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(psnr(a, b) == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-12));
  std::mt19937_64 rng(1);
  Image x(24, 20, 3), y(24, 20, 3);
  for (double& v : x.data) v = uni(rng, 0, 1);
  for (double& v : y.data) v = uni(rng, 0, 1);
  CHECK(psnr(x, y) == psnr(y, x));
  CHECK(ssim(x, y) < 0.5);
  CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
  CHECK_THROWS(psnr(x, a));
  CHECK_THROWS(ssim(x, a));
}

TEST_CASE("png round trip and quantization") {
  const fs::path dir = scratch("png");
  std::mt19937_64 rng(2);
  Image img(7, 5, 3);
  for (double& v : img.data) v = uni(rng, -0.1, 1.1);
  write_png(dir / "a.png", img);
  const Image back = read_png(dir / "a.png");
  REQUIRE(back.width == 7);
  REQUIRE(back.height == 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    CHECK(back.data[i] == quantize(img.data[i]) / 255.0);
    CHECK(std::abs(back.data[i] - std::clamp(img.data[i], 0.0, 1.0)) <= 0.5 / 255.0 + 1e-12);
  }
  CHECK(encode_png(img) == encode_png(img));
  CHECK_THROWS_AS(read_png(dir / "missing.png"), MissingFileError);
}

TEST_CASE("oracle render") {
  Camera cam;
  cam.width = cam.height = 17;
  cam.focal = 20.0;
  cam.pose = look_at({0, 0, 3}, {0, 0, 0}, {0, 1, 0});
  AnalyticScene empty;
  const OracleImage e = oracle_render(empty, cam);
  for (double v : e.rgb.data) CHECK(v == 1.0);
  for (double v : e.mask.data) CHECK(v == 0.0);

  AnalyticScene one;
  one.objects.push_back({AnalyticObject::Type::Sphere, {0, 0, 0}, 1.0, {}, {0.9, 0.1, 0.2}});
  const OracleImage o = oracle_render(one, cam);
  CHECK(o.rgb.rgb(8, 8) == Rgb{0.9, 0.1, 0.2});
  CHECK(o.mask.at(8, 8, 0) == 1.0);
  CHECK(o.mask.at(0, 0, 0) == 0.0);

  // Same ray, the nearer sphere wins regardless of list order.
  AnalyticScene two;
  two.objects.push_back({AnalyticObject::Type::Sphere, {0, 0, -1}, 0.5, {}, {0, 0, 1}});
  two.objects.push_back({AnalyticObject::Type::Sphere, {0, 0, 1}, 0.5, {}, {0, 1, 0}});
  CHECK(oracle_render(two, cam).rgb.rgb(8, 8) == Rgb{0, 1, 0});
  std::swap(two.objects[0], two.objects[1]);
  CHECK(oracle_render(two, cam).rgb.rgb(8, 8) == Rgb{0, 1, 0});

  AnalyticScene box;
  box.objects.push_back({AnalyticObject::Type::Box, {0, 0, 0}, 0.0, {0.5, 0.5, 0.5}, {0.3, 0.3, 0.3}});
  const OracleImage b = oracle_render(box, cam);
  CHECK(b.mask.at(8, 8, 0) == 1.0);
  CHECK(b.mask.at(1, 8, 0) == 0.0);

  AnalyticScene bad;
  bad.objects.push_back({AnalyticObject::Type::Sphere, {0, 0, 0}, -1.0, {}, {0.5, 0.5, 0.5}});
  CHECK_THROWS(bad.validate());
}

TEST_CASE("scene spec parsing") {
  const AnalyticScene s = parse_scene_spec(R"({"background": [0, 0, 0], "objects": [
      {"type": "sphere", "center": [0.1, 0.2, 0.3], "radius": 0.4, "color": [1, 0, 0]},
      {"type": "box", "center": [0, 0, 0], "half_extent": [0.1, 0.2, 0.3], "color": [0, 1, 0]}]})");
  REQUIRE(s.objects.size() == 2);
  CHECK(s.background == Rgb{0, 0, 0});
  CHECK(s.objects[0].radius == 0.4);
  CHECK(s.objects[1].type == AnalyticObject::Type::Box);
  CHECK(s.objects[1].half_extent == Vec3{0.1, 0.2, 0.3});
  CHECK_THROWS(parse_scene_spec(R"({"objects": [{"type": "cone"}]})"));
  CHECK_THROWS(parse_scene_spec("not json"));
}

TEST_CASE("dataset generate, load and re-save") {
  const fs::path dir = scratch("dataset");
  SyntheticOptions opt;
  opt.n_views = 8;
  opt.resolution = 24;
  opt.seed = 5;
  const AnalyticScene scene = three_sphere_scene();
  const MultiViewDataset gen = generate_synthetic_dataset(scene, opt, dir);
  CHECK(gen.views.size() == 8);
  const MultiViewDataset ds = load_dataset(dir);
  REQUIRE(ds.views.size() == 8);
  CHECK(ds.width == 24);
  CHECK(ds.has_masks());
  CHECK(ds.focal() == doctest::Approx(0.5 * 24 / std::tan(0.4)));
  for (std::size_t v = 0; v < 8; ++v) {
    for (int i = 0; i < 16; ++i) CHECK(std::abs(ds.views[v].pose.m[i] - gen.views[v].pose.m[i]) < 1e-9);
    const OracleImage o = oracle_render(scene, ds.camera(v));
    for (std::size_t i = 0; i < o.rgb.data.size(); ++i) CHECK(std::abs(ds.views[v].rgb.data[i] - o.rgb.data[i]) <= 1.0 / 255);
    CHECK(ds.views[v].mask->data == o.mask.data);
  }
  const std::string first = read_text_file(dir / "transforms.json");
  const fs::path again = scratch("dataset_again");
  save_dataset(ds, again);
  CHECK(read_text_file(again / "transforms.json") == first);
  CHECK(transforms_json(load_dataset(again)) == first);

  MultiViewDataset wide;
  wide.camera_angle_x = std::numbers::pi / 2;
  wide.width = 64;
  CHECK(wide.focal() == doctest::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("dataset load errors") {
  const fs::path dir = scratch("bad_dataset");
  CHECK_THROWS_AS(load_dataset(dir), MissingFileError);
  SyntheticOptions opt;
  opt.n_views = 2;
  opt.resolution = 8;
  generate_synthetic_dataset(three_sphere_scene(), opt, dir);
  CHECK(load_dataset(dir).views.size() == 2);
  fs::remove(dir / "r_1.png");
  try {
    load_dataset(dir);
    FAIL("expected a missing file error");
  } catch (const MissingFileError& e) {
    CHECK(std::string(e.what()).find("r_1") != std::string::npos);
  }

  const fs::path m = scratch("bad_matrix");
  generate_synthetic_dataset(three_sphere_scene(), opt, m);
  std::string text = read_text_file(m / "transforms.json");
  write_text_file(m / "transforms.json",
                  R"({"camera_angle_x": 0.8, "frames": [{"file_path": "./r_0", "transform_matrix": [[1,0,0],[0,1,0]]}]})");
  CHECK_THROWS_AS(load_dataset(m), MalformedMatrixError);
  write_text_file(m / "transforms.json",
                  R"({"camera_angle_x": 0.8, "frames": [{"file_path": "./r_0", "transform_matrix": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,1]]}]})");
  CHECK_THROWS_AS(load_dataset(m), MalformedMatrixError);

  write_text_file(m / "transforms.json", text);
  Image big(9, 8, 3, 0.5);
  write_png(m / "r_1.png", big);
  CHECK_THROWS_AS(load_dataset(m), ResolutionMismatchError);
}

TEST_CASE("checkpoint round trips bit-exactly") {
  std::mt19937_64 rng(7);
  const StrokeField f = mixed_field(rng);
  REQUIRE(f.strokes.size() == 10);
  ErrorGrid g({3, 4, 5}, Aabb{{-1, -1, -1}, {1, 1, 1}}, 0.0);
  for (double& v : g.raw()) v = uni(rng, -5, 5);

  const fs::path dir = scratch("checkpoint");
  save_stroke_field(f, &g, dir / "c.txt");
  const Checkpoint cp = load_stroke_field(dir / "c.txt");
  check_same_fields(f, cp.field);
  REQUIRE(cp.grid.has_value());
  CHECK(cp.grid->resolution() == g.resolution());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(same_bits(cp.grid->raw()[i], g.raw()[i]));
  CHECK(serialize_checkpoint(cp.field, &*cp.grid) == serialize_checkpoint(f, &g));

  const StrokeField empty;
  const Checkpoint e = parse_checkpoint(serialize_checkpoint(empty, nullptr));
  CHECK(e.field.strokes.empty());
  CHECK_FALSE(e.grid.has_value());
  check_same_fields(empty, e.field);
}

TEST_CASE("checkpoint errors") {
  std::mt19937_64 rng(9);
  const std::string text = serialize_checkpoint(mixed_field(rng), nullptr);
  std::string unknown = text;
  unknown.replace(unknown.find("sphere |"), 6, "blobby");
  try {
    parse_checkpoint(unknown);
    FAIL("expected an unknown kind error");
  } catch (const UnknownKindError& e) {
    CHECK(std::string(e.what()).find("blobby") != std::string::npos);
  }
  std::string version = text;
  version.replace(0, 14, "strokefield v9");
  CHECK_THROWS_AS(parse_checkpoint(version), VersionMismatchError);
  CHECK_THROWS_AS(parse_checkpoint(text.substr(0, text.size() / 2)), TruncatedFileError);
  CHECK_THROWS_AS(parse_checkpoint(""), TruncatedFileError);
  CHECK_THROWS_AS(load_stroke_field(fs::temp_directory_path() / "strokefield_no_such_file.txt"), MissingFileError);
}

TEST_CASE("hand-built stroke field matches the oracle") {
  const AnalyticScene scene = three_sphere_scene();
  StrokeField f;
  f.region.delta_mode = DeltaMode::Constant;
  f.region.constant_delta = 1e-4;
  f.background = scene.background;
  for (const AnalyticObject& o : scene.objects) {
    PrimitiveStroke s;
    s.kind = PrimitiveKind::Sphere;
    s.transform.translation = o.center;
    s.transform.scale = {o.radius, o.radius, o.radius};
    s.color = o.color;
    s.density = 1000.0;
    f.strokes.emplace_back(s);
  }
  SyntheticOptions opt;
  opt.n_views = 4;
  opt.resolution = 32;
  const MultiViewDataset ds = generate_synthetic_dataset(scene, opt);
  RenderSettings rs;
  rs.n_samples = 128;
  for (std::size_t v = 0; v < ds.views.size(); ++v) {
    const Camera cam = ds.camera(v);
    const RenderedImage img = render_image(f, cam, rs);
    CHECK(psnr(img.rgb, oracle_render(scene, cam).rgb) >= 20.0);
  }
}
