#pragma once

// PGM (P5) and PNG reading/writing. PNG goes through libpng; link PNG::PNG
// when including this header.

#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/image.hpp"

namespace gazetrack {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB

  RgbImage() = default;
  explicit RgbImage(const GrayImage& g) : width(g.width()), height(g.height()) {
    data.reserve(static_cast<std::size_t>(width) * height * 3);
    for (auto v : g.pixels()) data.insert(data.end(), {v, v, v});
  }
  void put(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
  }
};

inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
}

namespace detail {

inline int read_pnm_int(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) throw Error(ErrorCode::Parse, "malformed PNM header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 20) throw Error(ErrorCode::Parse, "PNM header value too large");
    c = in.get();
  }
  return v;  // the single whitespace after the number has been consumed
}

}  // namespace detail

/// Reads one binary PGM (P5) or PPM (P6) image from a stream. Color input is
/// converted with luma weights. Returns false on clean end of stream.
inline bool read_pnm(std::istream& in, GrayImage& out) {
  int c = in.get();
  while (c != EOF && std::isspace(c)) c = in.get();
  if (c == EOF) return false;
  const int kind = in.get();
  if (c != 'P' || (kind != '5' && kind != '6')) throw Error(ErrorCode::Parse, "not a binary PGM/PPM stream");
  const int w = detail::read_pnm_int(in);
  const int h = detail::read_pnm_int(in);
  const int maxval = detail::read_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw Error(ErrorCode::Parse, "unsupported PNM geometry");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> px(n);
  if (kind == '5') {
    in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw Error(ErrorCode::Parse, "truncated PGM data");
  } else {
    std::vector<std::uint8_t> rgb(n * 3);
    in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (static_cast<std::size_t>(in.gcount()) != rgb.size()) throw Error(ErrorCode::Parse, "truncated PPM data");
    for (std::size_t i = 0; i < n; ++i) px[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  }
  if (maxval != 255) {
    for (auto& v : px) v = static_cast<std::uint8_t>(std::min(255, (v * 255 + maxval / 2) / maxval));
  }
  out = GrayImage(w, h, std::move(px));
  return true;
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels().data()), static_cast<std::streamsize>(img.pixels().size()));
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_pgm(out, img);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline void png_error_fn(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

inline void png_warning_fn(png_structp, png_const_charp) {}

// setjmp frames must not hold objects with non-trivial destructors, so the
// libpng calls live in these small helpers.
inline bool png_decode(std::FILE* f, std::string& err, int& w, int& h, std::vector<std::uint8_t>& rgb) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, f);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  if (w <= 0 || h <= 0 || png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) {
    err = "unsupported PNG layout";
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool png_encode(std::FILE* f, std::string& err, int w, int h, int channels, const std::uint8_t* data) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(data + static_cast<std::size_t>(y) * w * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

inline detail::FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  detail::FilePtr f(std::fopen(path.string().c_str(), mode));
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return f;
}

}  // namespace detail

inline GrayImage read_png(const std::filesystem::path& path) {
  auto f = detail::open_file(path, "rb");
  std::string err;
  int w = 0, h = 0;
  std::vector<std::uint8_t> rgb;
  if (!detail::png_decode(f.get(), err, w, h, rgb)) {
    throw Error(ErrorCode::Parse, "cannot decode PNG " + path.string() + (err.empty() ? "" : ": " + err));
  }
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
  return GrayImage(w, h, std::move(px));
}

inline void write_png(const std::filesystem::path& path, const GrayImage& img) {
  auto f = detail::open_file(path, "wb");
  std::string err;
  if (!detail::png_encode(f.get(), err, img.width(), img.height(), 1, img.pixels().data())) {
    throw Error(ErrorCode::Io, "PNG write failed: " + err);
  }
}

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  auto f = detail::open_file(path, "wb");
  std::string err;
  if (!detail::png_encode(f.get(), err, img.width, img.height, 3, img.data.data())) {
    throw Error(ErrorCode::Io, "PNG write failed: " + err);
  }
}

/// Loads a grayscale image by extension (.png, otherwise PGM/PPM).
inline GrayImage read_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") return read_png(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  GrayImage img;
  if (!read_pnm(in, img)) throw Error(ErrorCode::Parse, "empty image file " + path.string());
  return img;
}

inline void write_image(const std::filesystem::path& path, const GrayImage& img) {
  auto ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") {
    write_png(path, img);
  } else {
    write_pgm(path, img);
  }
}

}  // namespace gazetrack
