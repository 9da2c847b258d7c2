// SPDX-License-Identifier: Apache-2.0
#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "strokefield/errors.hpp"
#include "strokefield/scene_io.hpp"

namespace strokefield {

std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

Image read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingFileError("missing image: " + path.string());
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str()))
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  int channels = 3;
  if (img.format & PNG_FORMAT_FLAG_COLOR) {
    if (img.format & PNG_FORMAT_FLAG_ALPHA) {
      img.format = PNG_FORMAT_RGBA;
      channels = 4;
    } else {
      img.format = PNG_FORMAT_RGB;
    }
  } else {
    img.format = PNG_FORMAT_GRAY;
    channels = 1;
  }
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  Image out(static_cast<int>(img.width), static_cast<int>(img.height), channels);
  for (std::size_t i = 0; i < buf.size(); ++i) out.data[i] = buf[i] / 255.0;
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  if (img.channels != 1 && img.channels != 3 && img.channels != 4)
    throw DomainError("PNG output needs 1, 3 or 4 channels");
  if (img.width <= 0 || img.height <= 0) throw DomainError("PNG output needs a non-empty image");
  std::vector<png_byte> px(img.data.size());
  std::transform(img.data.begin(), img.data.end(), px.begin(), quantize);
  png_image p{};
  p.version = PNG_IMAGE_VERSION;
  p.width = static_cast<png_uint_32>(img.width);
  p.height = static_cast<png_uint_32>(img.height);
  p.format = img.channels == 1 ? PNG_FORMAT_GRAY : (img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&p, nullptr, &size, 0, px.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + p.message);
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&p, bytes.data(), &size, 0, px.data(), 0, nullptr))
    throw IoError(std::string("PNG encode failed: ") + p.message);
  bytes.resize(size);
  return bytes;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + path.string());
}

namespace {

void require_same_shape(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw ResolutionMismatchError("images differ in shape");
}

}  // namespace

double psnr(const Image& image, const Image& reference) {
  require_same_shape(image, reference);
  if (image.data.empty()) throw DomainError("psnr of an empty image");
  double se = 0.0;
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    const double d = image.data[i] - reference.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(image.data.size());
  if (mse < 1e-10) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& image, const Image& reference) {
  require_same_shape(image, reference);
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  if (image.width < kWin || image.height < kWin) throw DomainError("ssim needs images of at least 11x11");
  std::array<double, kWin> g{};
  double gs = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double x = i - kWin / 2;
    g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;

  // Separable Gaussian filtering over the valid region.
  const int w = image.width, h = image.height;
  const int ow = w - kWin + 1, oh = h - kWin + 1;
  auto filter = [&](const std::vector<double>& src) {
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h), out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < kWin; ++k) s += g[k] * src[static_cast<std::size_t>(y) * w + x + k];
        tmp[static_cast<std::size_t>(y) * ow + x] = s;
      }
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int k = 0; k < kWin; ++k) s += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
        out[static_cast<std::size_t>(y) * ow + x] = s;
      }
    return out;
  };

  double total = 0.0;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (int c = 0; c < image.channels; ++c) {
    std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = image.data[i * image.channels + c];
      b[i] = reference.data[i * image.channels + c];
      aa[i] = a[i] * a[i];
      bb[i] = b[i] * b[i];
      ab[i] = a[i] * b[i];
    }
    const auto ma = filter(a), mb = filter(b), maa = filter(aa), mbb = filter(bb), mab = filter(ab);
    double acc = 0.0;
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double va = maa[i] - ma[i] * ma[i];
      const double vb = mbb[i] - mb[i] * mb[i];
      const double cov = mab[i] - ma[i] * mb[i];
      acc += ((2.0 * ma[i] * mb[i] + c1) * (2.0 * cov + c2)) /
             ((ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(ma.size());
  }
  return total / image.channels;
}

}  // namespace strokefield
