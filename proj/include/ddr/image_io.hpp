#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ddr/common.hpp"

namespace ddr {

// Row-major RGB image, values in [0,1].
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<Vec3> pixels;

  ImageRGB() = default;
  ImageRGB(int w, int h) : width(w), height(h), pixels(size_t(w) * h, Vec3::Zero()) {}
  Vec3& at(int x, int y) { return pixels[size_t(y) * width + x]; }
  const Vec3& at(int x, int y) const { return pixels[size_t(y) * width + x]; }
};

// Row-major single-channel float map (depth, weights).
struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  ImageGray() = default;
  ImageGray(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(size_t(w) * h, fill) {}
  double& at(int x, int y) { return pixels[size_t(y) * width + x]; }
  double at(int x, int y) const { return pixels[size_t(y) * width + x]; }
};

namespace io_detail {
inline uint8_t quantize8(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(c * 255.0));
}

struct FileHandle {
  FILE* f = nullptr;
  explicit FileHandle(const std::string& path, const char* mode)
      : f(std::fopen(path.c_str(), mode)) {}
  ~FileHandle() {
    if (f) std::fclose(f);
  }
};
}  // namespace io_detail

inline void write_png(const ImageRGB& img, const std::string& path) {
  require(img.width > 0 && img.height > 0, "write_png: empty image");
  io_detail::FileHandle fh(path, "wb");
  require(fh.f != nullptr, "write_png: cannot open " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  require(png, "write_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("write_png: libpng failure for " + path);
  }
  png_init_io(png, fh.f);
  png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<uint8_t> row(size_t(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        row[size_t(x) * 3 + c] = io_detail::quantize8(img.at(x, y)[c]);
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline ImageRGB read_png(const std::string& path) {
  io_detail::FileHandle fh(path, "rb");
  require(fh.f != nullptr, "read_png: cannot open " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png, "read_png: libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("read_png: malformed PNG " + path);
  }
  png_init_io(png, fh.f);
  png_read_info(png, info);
  // Normalize any input to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = png_get_image_width(png, info);
  const int h = png_get_image_height(png, info);
  ImageRGB img(w, h);
  std::vector<uint8_t> row(size_t(w) * 3);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(x, y)[c] = row[size_t(x) * 3 + c] / 255.0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

// PFM, grayscale variant ("Pf"), little-endian f32, bottom-to-top rows.
inline void write_pfm(const ImageGray& img, const std::string& path) {
  require(img.width > 0 && img.height > 0, "write_pfm: empty image");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_pfm: cannot open " + path);
  out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
  for (int y = img.height - 1; y >= 0; --y)
    for (int x = 0; x < img.width; ++x) {
      const float v = static_cast<float>(img.at(x, y));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  require(out.good(), "write_pfm: short write to " + path);
}

inline ImageGray read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_pfm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  require(magic == "Pf", "read_pfm: not a grayscale PFM: " + path);
  require(w > 0 && h > 0, "read_pfm: bad dimensions in " + path);
  require(scale < 0.0, "read_pfm: big-endian PFM unsupported: " + path);
  in.get();  // single whitespace byte terminating the header
  ImageGray img(w, h);
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x) {
      float v;
      in.read(reinterpret_cast<char*>(&v), 4);
      img.at(x, y) = v;
    }
  require(in.good(), "read_pfm: truncated data in " + path);
  return img;
}

// Binary PGM (P5), 8-bit. Values are expected in [0,1].
inline void write_pgm(const ImageGray& img, const std::string& path) {
  require(img.width > 0 && img.height > 0, "write_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_pgm: cannot open " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.put(static_cast<char>(io_detail::quantize8(img.at(x, y))));
  require(out.good(), "write_pgm: short write to " + path);
}

inline ImageGray read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_pgm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  require(magic == "P5", "read_pgm: not a binary PGM: " + path);
  require(w > 0 && h > 0 && maxval == 255, "read_pgm: bad header in " + path);
  in.get();
  ImageGray img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img.at(x, y) = in.get() / 255.0;
  require(!in.fail(), "read_pgm: truncated data in " + path);
  return img;
}

}  // namespace ddr
