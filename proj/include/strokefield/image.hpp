// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "strokefield/vec.hpp"

namespace strokefield {

/// Row-major float image, channels interleaved, values nominally in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

  Rgb rgb(int x, int y) const { return {at(x, y, 0), at(x, y, 1), at(x, y, 2)}; }
  void set_rgb(int x, int y, const Rgb& v) {
    at(x, y, 0) = v.x;
    at(x, y, 1) = v.y;
    at(x, y, 2) = v.z;
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
};

}  // namespace strokefield
