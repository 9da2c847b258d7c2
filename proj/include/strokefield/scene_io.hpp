// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "strokefield/error_field.hpp"
#include "strokefield/field.hpp"
#include "strokefield/image.hpp"

namespace strokefield {

// ---- images ----

/// 8-bit PNG, 1, 3 or 4 channels, values scaled to [0,1]. Throws MissingFileError
/// or IoError.
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit PNG; values are clamped to [0,1] and rounded.
void write_png(const std::filesystem::path& path, const Image& img);

/// Encoded PNG bytes (what write_png puts on disk).
std::vector<std::uint8_t> encode_png(const Image& img);

/// 8-bit quantization as applied by write_png.
std::uint8_t quantize(double v);

double psnr(const Image& image, const Image& reference);
double ssim(const Image& image, const Image& reference);

// ---- datasets ----

struct View {
  std::string file_path;  // as written in transforms.json
  Image rgb;
  std::optional<Image> mask;  // single channel, 0 or 1
  Mat4 pose;                  // camera-to-world
};

struct MultiViewDataset {
  double camera_angle_x = 0.8;
  int width = 0;
  int height = 0;
  std::vector<View> views;
  Aabb bbox;
  Rgb background{1.0, 1.0, 1.0};

  double focal() const;
  Camera camera(std::size_t view) const;
  bool has_masks() const;
  void validate() const;
};

/// Reads dir/transforms.json. Image paths resolve relative to dir; a path without
/// extension gets ".png"; an optional mask sits next to it with a "_mask" suffix.
MultiViewDataset load_dataset(const std::filesystem::path& dir);

/// Writes transforms.json plus every image and mask.
void save_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir);

/// transforms.json text for the dataset.
std::string transforms_json(const MultiViewDataset& dataset);

struct AnalyticObject {
  enum class Type : std::uint8_t { Sphere, Box };
  Type type = Type::Sphere;
  Vec3 center;
  double radius = 0.5;    // sphere
  Vec3 half_extent{0.5, 0.5, 0.5};  // box, axis aligned
  Rgb color{0.5, 0.5, 0.5};
};

struct AnalyticScene {
  std::vector<AnalyticObject> objects;
  Rgb background{1.0, 1.0, 1.0};

  void validate() const;
};

/// Three flat-colored spheres inside [-1,1]^3 on a white background.
AnalyticScene three_sphere_scene();

/// JSON scene spec: {"background": [r,g,b], "objects": [{"type": "sphere",
/// "center": [..], "radius": r, "color": [..]}, {"type": "box", "center": [..],
/// "half_extent": [..], "color": [..]}]}.
AnalyticScene load_scene_spec(const std::filesystem::path& path);
AnalyticScene parse_scene_spec(std::string_view json_text);

struct OracleImage {
  Image rgb;
  Image mask;
};

/// Exact ray casting: nearest hit's flat color, background elsewhere.
OracleImage oracle_render(const AnalyticScene& scene, const Camera& camera);

struct SyntheticOptions {
  int n_views = 9;
  int resolution = 64;
  double camera_angle_x = 0.8;
  double radius = 3.2;
  double elevation = 0.45;  // radians
  std::uint64_t seed = 0;   // random azimuth phase of the evenly spaced orbit
};

/// Camera-to-world poses of the orbit used by generate_synthetic_dataset.
std::vector<Mat4> orbit_poses(int n_views, double radius, double elevation, double phase);

/// Renders the scene from an orbit and returns the dataset with 8-bit quantized
/// images. Writes it to `out_dir` when non-empty.
MultiViewDataset generate_synthetic_dataset(const AnalyticScene& scene, const SyntheticOptions& options,
                                            const std::filesystem::path& out_dir = {});

// ---- checkpoints ----

struct Checkpoint {
  StrokeField field;
  std::optional<ErrorGrid> grid;
};

std::string serialize_checkpoint(const StrokeField& field, const ErrorGrid* grid);
Checkpoint parse_checkpoint(std::string_view text);

void save_stroke_field(const StrokeField& field, const ErrorGrid* grid, const std::filesystem::path& path);
Checkpoint load_stroke_field(const std::filesystem::path& path);

/// Whole file as a string; MissingFileError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace strokefield
