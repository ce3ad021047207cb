#pragma once

// Minimal PNG output for quick inspection: 2-D scatter plots and grayscale
// image grids. Needs libpng at link time.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rcfgan/tensor.hpp"

namespace rcfgan {

inline constexpr std::size_t kScatterCanvas = 512;

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 255) : width(w), height(h), pixels(w * h * 3, fill) {}

  void set(std::size_t x, std::size_t y, std::array<std::uint8_t, 3> rgb) {
    if (x >= width || y >= height) return;
    std::copy(rgb.begin(), rgb.end(), pixels.begin() + static_cast<std::ptrdiff_t>((y * width + x) * 3));
  }
};

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw std::runtime_error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&img.pixels[y * img.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace detail {

inline std::array<std::uint8_t, 3> class_color(std::size_t c) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette{{{31, 119, 180},
                                                                        {255, 127, 14},
                                                                        {44, 160, 44},
                                                                        {214, 39, 40},
                                                                        {148, 103, 189},
                                                                        {140, 86, 75},
                                                                        {227, 119, 194},
                                                                        {23, 190, 207}}};
  return kPalette[c % kPalette.size()];
}

}  // namespace detail

// Axis-fit scatter of [n x 2] point sets, one palette color per set.
inline RgbImage scatter_image(const std::vector<const Tensor*>& sets) {
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
  for (const Tensor* s : sets) {
    if (s->rank() != 2 || s->dim(1) != 2) throw DimensionError("scatter_image: expected [n x 2] point sets");
    for (std::size_t i = 0; i < s->dim(0); ++i) {
      const double x = s->at(i, 0), y = s->at(i, 1);
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      lo_x = std::min(lo_x, x), hi_x = std::max(hi_x, x);
      lo_y = std::min(lo_y, y), hi_y = std::max(hi_y, y);
    }
  }
  RgbImage img(kScatterCanvas, kScatterCanvas);
  if (!(lo_x <= hi_x)) return img;
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9}) * 1.1;
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  const double px = static_cast<double>(kScatterCanvas - 1);
  for (std::size_t c = 0; c < sets.size(); ++c) {
    const Tensor& s = *sets[c];
    for (std::size_t i = 0; i < s.dim(0); ++i) {
      const double u = ((s.at(i, 0) - cx) / span + 0.5) * px;
      const double v = (0.5 - (s.at(i, 1) - cy) / span) * px;
      if (!std::isfinite(u) || !std::isfinite(v)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const long x = std::lround(u) + dx, y = std::lround(v) + dy;
          if (x >= 0 && y >= 0) img.set(static_cast<std::size_t>(x), static_cast<std::size_t>(y), detail::class_color(c));
        }
    }
  }
  return img;
}

// Rows of `images` ([n x rows*cols], values in [-1, 1]) tiled `per_row` across.
inline RgbImage image_grid(const Tensor& images, std::size_t rows, std::size_t cols, std::size_t count,
                           std::size_t per_row = 8) {
  if (images.rank() != 2 || images.dim(1) != rows * cols) throw DimensionError("image_grid: pixel count mismatch");
  count = std::min(count, images.dim(0));
  const std::size_t grid_rows = (count + per_row - 1) / per_row;
  RgbImage img(per_row * cols, std::max<std::size_t>(1, grid_rows) * rows, 0);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t ox = (k % per_row) * cols, oy = (k / per_row) * rows;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = std::clamp(images.at(k, r * cols + c), -1.0, 1.0);
        const auto g = static_cast<std::uint8_t>(std::lround((v + 1.0) * 127.5));
        img.set(ox + c, oy + r, {g, g, g});
      }
  }
  return img;
}

}  // namespace rcfgan
