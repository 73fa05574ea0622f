// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace esr {

/// 8-bit raster, channels interleaved (1 = gray, 3 = RGB).
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  [[nodiscard]] bool empty() const { return width <= 0 || height <= 0 || pixels.empty(); }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  [[nodiscard]] std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads binary/ASCII PGM, binary PPM and 8-bit PNG (gray or RGB; alpha dropped).
Image read_image(const std::filesystem::path& path);

/// Writes by extension: .pgm/.ppm (binary netpbm) or .png.
void write_image(const std::filesystem::path& path, const Image& image);

}  // namespace esr
