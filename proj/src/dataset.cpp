// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "strokefield/errors.hpp"
#include "strokefield/scene_io.hpp"

namespace strokefield {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingFileError("missing file: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("short write to " + path.string());
}

double MultiViewDataset::focal() const { return 0.5 * width / std::tan(0.5 * camera_angle_x); }

Camera MultiViewDataset::camera(std::size_t view) const {
  Camera c;
  c.width = width;
  c.height = height;
  c.focal = focal();
  c.pose = views.at(view).pose;
  return c;
}

bool MultiViewDataset::has_masks() const {
  return !views.empty() && std::all_of(views.begin(), views.end(), [](const View& v) { return v.mask.has_value(); });
}

void MultiViewDataset::validate() const {
  if (!(camera_angle_x > 0.0 && camera_angle_x < std::numbers::pi)) throw DomainError("camera_angle_x out of range");
  for (const View& v : views) {
    if (v.rgb.width != width || v.rgb.height != height)
      throw ResolutionMismatchError("image " + v.file_path + " does not match the dataset resolution");
    if (v.mask && (v.mask->width != width || v.mask->height != height))
      throw ResolutionMismatchError("mask of " + v.file_path + " does not match the dataset resolution");
    Mat4 inv;
    if (!invert(v.pose, inv)) throw MalformedMatrixError("pose of " + v.file_path + " is not invertible");
  }
}

namespace {

std::filesystem::path image_path(const std::filesystem::path& dir, const std::string& file_path) {
  std::filesystem::path p = dir / file_path;
  if (!p.has_extension()) p += ".png";
  return p;
}

std::filesystem::path mask_path(const std::filesystem::path& image) {
  std::filesystem::path p = image;
  p.replace_filename(image.stem().string() + "_mask" + image.extension().string());
  return p;
}

Vec3 vec3_of(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw IoError(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json json_of(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Image to_rgb(const Image& img, const std::string& name) {
  if (img.channels == 3) return img;
  Image out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (int c = 0; c < 3; ++c) {
      if (img.channels == 1)
        out.data[i * 3 + c] = img.data[i];
      else if (img.channels == 4)
        out.data[i * 3 + c] = img.data[i * 4 + c];
      else
        throw IoError("unsupported channel count in " + name);
    }
  return out;
}

}  // namespace

MultiViewDataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path tf = dir / "transforms.json";
  if (!std::filesystem::exists(tf)) throw MissingFileError("missing file: " + tf.string());
  json j;
  try {
    j = json::parse(read_text_file(tf));
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + tf.string() + ": " + e.what());
  }
  MultiViewDataset ds;
  try {
    ds.camera_angle_x = j.at("camera_angle_x").get<double>();
    if (j.contains("background")) ds.background = vec3_of(j["background"], "background");
    if (j.contains("bbox")) {
      const json& b = j["bbox"];
      if (!b.is_array() || b.size() != 2) throw IoError("bbox must be [[lo], [hi]]");
      ds.bbox = {vec3_of(b[0], "bbox"), vec3_of(b[1], "bbox")};
    }
    for (const json& fr : j.at("frames")) {
      View v;
      v.file_path = fr.at("file_path").get<std::string>();
      const json& m = fr.at("transform_matrix");
      if (!m.is_array() || m.size() != 4) throw MalformedMatrixError("transform_matrix of " + v.file_path + " is not 4x4");
      for (int r = 0; r < 4; ++r) {
        if (!m[r].is_array() || m[r].size() != 4)
          throw MalformedMatrixError("transform_matrix of " + v.file_path + " is not 4x4");
        for (int c = 0; c < 4; ++c) v.pose(r, c) = m[r][c].get<double>();
      }
      Mat4 inv;
      if (!invert(v.pose, inv)) throw MalformedMatrixError("transform_matrix of " + v.file_path + " is not invertible");
      const auto ip = image_path(dir, v.file_path);
      v.rgb = to_rgb(read_png(ip), ip.string());
      const auto mp = mask_path(ip);
      if (std::filesystem::exists(mp)) {
        const Image raw = read_png(mp);
        Image mask(raw.width, raw.height, 1);
        // Threshold at 127 on the 8-bit scale (first channel).
        for (std::size_t i = 0; i < raw.pixel_count(); ++i)
          mask.data[i] = std::lround(raw.data[i * raw.channels] * 255.0) > 127 ? 1.0 : 0.0;
        v.mask = std::move(mask);
      }
      if (ds.views.empty()) {
        ds.width = v.rgb.width;
        ds.height = v.rgb.height;
      }
      ds.views.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw IoError("malformed " + tf.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

std::string transforms_json(const MultiViewDataset& dataset) {
  json j;
  j["camera_angle_x"] = dataset.camera_angle_x;
  j["background"] = json_of(dataset.background);
  j["bbox"] = json::array({json_of(dataset.bbox.lo), json_of(dataset.bbox.hi)});
  json frames = json::array();
  for (const View& v : dataset.views) {
    json m = json::array();
    for (int r = 0; r < 4; ++r) m.push_back(json::array({v.pose(r, 0), v.pose(r, 1), v.pose(r, 2), v.pose(r, 3)}));
    frames.push_back({{"file_path", v.file_path}, {"transform_matrix", m}});
  }
  j["frames"] = frames;
  return j.dump(2) + "\n";
}

void save_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const View& v : dataset.views) {
    const auto ip = image_path(dir, v.file_path);
    std::filesystem::create_directories(ip.parent_path(), ec);
    write_png(ip, v.rgb);
    if (v.mask) write_png(mask_path(ip), *v.mask);
  }
  write_text_file(dir / "transforms.json", transforms_json(dataset));
}

void AnalyticScene::validate() const {
  auto unit = [](const Rgb& c) { return c.x >= 0 && c.x <= 1 && c.y >= 0 && c.y <= 1 && c.z >= 0 && c.z <= 1; };
  if (!unit(background)) throw DomainError("scene background must be in [0,1]");
  for (const AnalyticObject& o : objects) {
    if (!unit(o.color)) throw DomainError("object colors must be in [0,1]");
    if (o.type == AnalyticObject::Type::Sphere && !(o.radius > 0.0)) throw DomainError("sphere radius must be positive");
    if (o.type == AnalyticObject::Type::Box &&
        !(o.half_extent.x > 0.0 && o.half_extent.y > 0.0 && o.half_extent.z > 0.0))
      throw DomainError("box extents must be positive");
  }
}

AnalyticScene three_sphere_scene() {
  AnalyticScene s;
  s.background = {1.0, 1.0, 1.0};
  s.objects.push_back({AnalyticObject::Type::Sphere, {-0.55, -0.35, 0.1}, 0.2, {}, {0.85, 0.2, 0.15}});
  s.objects.push_back({AnalyticObject::Type::Sphere, {0.5, -0.25, -0.2}, 0.16, {}, {0.2, 0.7, 0.3}});
  s.objects.push_back({AnalyticObject::Type::Sphere, {0.05, 0.55, 0.25}, 0.18, {}, {0.2, 0.35, 0.85}});
  return s;
}

AnalyticScene parse_scene_spec(std::string_view text) {
  AnalyticScene s;
  try {
    const json j = json::parse(text);
    if (j.contains("background")) s.background = vec3_of(j["background"], "background");
    for (const json& o : j.at("objects")) {
      AnalyticObject obj;
      const std::string type = o.at("type").get<std::string>();
      obj.center = vec3_of(o.at("center"), "center");
      obj.color = vec3_of(o.at("color"), "color");
      if (type == "sphere") {
        obj.type = AnalyticObject::Type::Sphere;
        obj.radius = o.at("radius").get<double>();
      } else if (type == "box") {
        obj.type = AnalyticObject::Type::Box;
        obj.half_extent = vec3_of(o.at("half_extent"), "half_extent");
      } else {
        throw UnknownKindError("unknown object type: " + type);
      }
      s.objects.push_back(obj);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

AnalyticScene load_scene_spec(const std::filesystem::path& path) { return parse_scene_spec(read_text_file(path)); }

namespace {

// Nearest positive hit distance, or infinity.
double hit_distance(const AnalyticObject& o, const Vec3& orig, const Vec3& dir) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (o.type == AnalyticObject::Type::Sphere) {
    const Vec3 oc = orig - o.center;
    const double b = dot(oc, dir);
    const double c = dot(oc, oc) - o.radius * o.radius;
    const double disc = b * b - c;
    if (disc < 0.0) return kInf;
    const double sq = std::sqrt(disc);
    const double t0 = -b - sq, t1 = -b + sq;
    if (t0 > 0.0) return t0;
    return t1 > 0.0 ? t1 : kInf;
  }
  double tmin = -kInf, tmax = kInf;
  for (int a = 0; a < 3; ++a) {
    const double lo = o.center[a] - o.half_extent[a], hi = o.center[a] + o.half_extent[a];
    if (dir[a] == 0.0) {
      if (orig[a] < lo || orig[a] > hi) return kInf;
      continue;
    }
    double ta = (lo - orig[a]) / dir[a], tb = (hi - orig[a]) / dir[a];
    if (ta > tb) std::swap(ta, tb);
    tmin = std::max(tmin, ta);
    tmax = std::min(tmax, tb);
  }
  if (tmax < tmin || tmax <= 0.0) return kInf;
  return tmin > 0.0 ? tmin : tmax;
}

}  // namespace

OracleImage oracle_render(const AnalyticScene& scene, const Camera& camera) {
  scene.validate();
  OracleImage out{Image(camera.width, camera.height, 3), Image(camera.width, camera.height, 1)};
  for (const PixelRay& pr : generate_rays(camera)) {
    double best = std::numeric_limits<double>::infinity();
    Rgb color = scene.background;
    for (const AnalyticObject& o : scene.objects) {
      const double t = hit_distance(o, pr.ray.origin, pr.ray.direction);
      if (t < best) {
        best = t;
        color = o.color;
      }
    }
    out.rgb.set_rgb(pr.px, pr.py, color);
    out.mask.at(pr.px, pr.py, 0) = std::isfinite(best) ? 1.0 : 0.0;
  }
  return out;
}

std::vector<Mat4> orbit_poses(int n_views, double radius, double elevation, double phase) {
  std::vector<Mat4> poses;
  for (int i = 0; i < n_views; ++i) {
    const double az = phase + 2.0 * std::numbers::pi * i / n_views;
    const Vec3 eye{radius * std::cos(elevation) * std::cos(az), radius * std::cos(elevation) * std::sin(az),
                   radius * std::sin(elevation)};
    poses.push_back(look_at(eye, {0.0, 0.0, 0.0}));
  }
  return poses;
}

MultiViewDataset generate_synthetic_dataset(const AnalyticScene& scene, const SyntheticOptions& options,
                                            const std::filesystem::path& out_dir) {
  if (options.n_views < 1) throw DomainError("need at least one view");
  if (options.resolution < 1) throw DomainError("resolution must be positive");
  scene.validate();
  std::mt19937_64 rng(options.seed);
  const double phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  MultiViewDataset ds;
  ds.camera_angle_x = options.camera_angle_x;
  ds.width = ds.height = options.resolution;
  ds.background = scene.background;
  const auto poses = orbit_poses(options.n_views, options.radius, options.elevation, phase);
  for (int i = 0; i < options.n_views; ++i) {
    View v;
    v.file_path = "./r_" + std::to_string(i);
    v.pose = poses[i];
    ds.views.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < ds.views.size(); ++i) {
    OracleImage img = oracle_render(scene, ds.camera(i));
    // Quantize now so the in-memory dataset equals what load_dataset returns.
    for (double& x : img.rgb.data) x = quantize(x) / 255.0;
    ds.views[i].rgb = std::move(img.rgb);
    ds.views[i].mask = std::move(img.mask);
  }
  if (!out_dir.empty()) save_dataset(ds, out_dir);
  return ds;
}

}  // namespace strokefield
