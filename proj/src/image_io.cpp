// Copyright 2026 The esr-net Authors
// SPDX-License-Identifier: Apache-2.0

#include "esr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

namespace esr {
namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

// Next whitespace-separated header token, skipping '#' comments.
std::string netpbm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

Image read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImageError("cannot open " + path.string());
  const std::string magic = netpbm_token(in);
  if (magic != "P5" && magic != "P6" && magic != "P2") {
    throw ImageError(path.string() + ": unsupported netpbm magic '" + magic + "'");
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(netpbm_token(in));
    h = std::stoi(netpbm_token(in));
    maxval = std::stoi(netpbm_token(in));
  } catch (const std::exception&) {
    throw ImageError(path.string() + ": malformed netpbm header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw ImageError(path.string() + ": unsupported netpbm geometry or depth");
  }
  Image img(w, h, magic == "P6" ? 3 : 1);
  if (magic == "P2") {
    for (auto& px : img.pixels) {
      const std::string t = netpbm_token(in);
      if (t.empty()) throw ImageError(path.string() + ": truncated pixel data");
      px = static_cast<std::uint8_t>(std::stoi(t) * 255 / maxval);
    }
    return img;
  }
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw ImageError(path.string() + ": truncated pixel data");
  }
  if (maxval != 255) {
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(px * 255 / maxval);
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw ImageError(path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height), color ? 3 : 1);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ImageError(path.string() + ": " + png.message);
  }
  return img;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ImageError("missing image file " + path.string());
  const auto ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  return read_netpbm(path);
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (image.empty() || (image.channels != 1 && image.channels != 3)) {
    throw ImageError("write_image: unsupported raster");
  }
  const auto ext = lower_ext(path);
  if (ext == ".png") {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0, nullptr)) {
      throw ImageError(path.string() + ": " + png.message);
    }
    return;
  }
  if (ext == ".pgm" && image.channels != 1) throw ImageError("PGM output needs a gray image");
  if (ext == ".ppm" && image.channels != 3) throw ImageError("PPM output needs an RGB image");
  if (ext != ".pgm" && ext != ".ppm") throw ImageError("unsupported image extension " + ext);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ImageError("cannot write " + path.string());
  out << (image.channels == 3 ? "P6" : "P5") << '\n'
      << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

}  // namespace esr
