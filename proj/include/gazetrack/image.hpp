#pragma once

// Raster types and the preprocessing primitives used by the tracker:
// block downsampling, isodata thresholding, dark-foreground segmentation,
// 8-connected component labeling and 3x3 Sobel gradients.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gazetrack/error.hpp"

namespace gazetrack {

/// Inclusive pixel rectangle.
struct PixelBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = -1;
  int y_max = -1;

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }
  bool empty() const { return x_max < x_min || y_max < y_min; }
  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  PixelBox clamped(int w, int h) const {
    return {std::max(x_min, 0), std::max(y_min, 0), std::min(x_max, w - 1), std::min(y_max, h - 1)};
  }
  PixelBox intersect(const PixelBox& o) const {
    return {std::max(x_min, o.x_min), std::max(y_min, o.y_min), std::min(x_max, o.x_max),
            std::min(y_max, o.y_max)};
  }
  bool operator==(const PixelBox&) const = default;
};

class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error(ErrorCode::InvalidArgument, "pixel count does not match width x height");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }
  PixelBox bounds() const { return {0, 0, width_ - 1, height_ - 1}; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  GrayImage crop(const PixelBox& box) const {
    const PixelBox b = box.clamped(width_, height_);
    if (b.empty()) throw Error(ErrorCode::InvalidArgument, "crop box outside image");
    GrayImage out(b.width(), b.height());
    for (int y = b.y_min; y <= b.y_max; ++y) {
      for (int x = b.x_min; x <= b.x_max; ++x) out.at(x - b.x_min, y - b.y_min) = at(x, y);
    }
    return out;
  }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Segmentation mask. Foreground (1) means dark: pixel <= threshold.
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(int width, int height, bool fill = false)
      : width_(width), height_(height),
        mask_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool at(int x, int y) const { return mask_[index(x, y)] != 0; }
  void set(int x, int y, bool v) { mask_[index(x, y)] = v ? 1 : 0; }
  std::span<const std::uint8_t> mask() const { return mask_; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1)); }

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> mask_;
};

struct Region {
  int label = 0;
  std::size_t pixel_count = 0;
  PixelBox bounding_box;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

struct GradientMap {
  int width = 0;
  int height = 0;
  std::vector<float> gx;
  std::vector<float> gy;
  std::vector<float> magnitude;

  float mag(int x, int y) const { return magnitude[static_cast<std::size_t>(y) * width + x]; }
};

/// Block-average downsampling; each output pixel is the round-half-up mean
/// of its factor x factor source block.
inline GrayImage downsample(const GrayImage& img, int factor) {
  if (factor < 1) throw Error(ErrorCode::InvalidArgument, "downsample factor must be >= 1");
  if (img.width() % factor != 0 || img.height() % factor != 0) {
    throw Error(ErrorCode::NonDivisibleDimensions,
                std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                    " not divisible by " + std::to_string(factor));
  }
  const int ow = img.width() / factor;
  const int oh = img.height() / factor;
  const unsigned n = static_cast<unsigned>(factor * factor);
  GrayImage out(ow, oh);
  std::vector<unsigned> row_sums(static_cast<std::size_t>(ow));
  for (int oy = 0; oy < oh; ++oy) {
    std::fill(row_sums.begin(), row_sums.end(), 0u);
    for (int dy = 0; dy < factor; ++dy) {
      const int y = oy * factor + dy;
      for (int x = 0; x < img.width(); ++x) row_sums[static_cast<std::size_t>(x / factor)] += img.at(x, y);
    }
    for (int ox = 0; ox < ow; ++ox) {
      out.at(ox, oy) = static_cast<std::uint8_t>((row_sums[static_cast<std::size_t>(ox)] + n / 2) / n);
    }
  }
  return out;
}

namespace detail {

using Histogram = std::array<std::uint64_t, 256>;

inline Histogram histogram(const GrayImage& img, const PixelBox& roi) {
  Histogram h{};
  for (int y = roi.y_min; y <= roi.y_max; ++y) {
    for (int x = roi.x_min; x <= roi.x_max; ++x) ++h[img.at(x, y)];
  }
  return h;
}

inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace detail

/// Midpoint of the class means for the split {<= t} / {> t}. An empty class
/// contributes the other class mean, so a single-intensity image maps onto
/// its own intensity.
inline double isodata_midpoint(const detail::Histogram& h, int t) {
  double n_lo = 0, s_lo = 0, n_hi = 0, s_hi = 0;
  for (int v = 0; v < 256; ++v) {
    const auto c = static_cast<double>(h[static_cast<std::size_t>(v)]);
    if (v <= t) {
      n_lo += c;
      s_lo += c * v;
    } else {
      n_hi += c;
      s_hi += c * v;
    }
  }
  if (n_lo == 0 && n_hi == 0) return t;
  if (n_lo == 0) return s_hi / n_hi;
  if (n_hi == 0) return s_lo / n_lo;
  return 0.5 * (s_lo / n_lo + s_hi / n_hi);
}

inline int isodata_threshold(const GrayImage& img, const PixelBox& roi) {
  const PixelBox r = roi.clamped(img.width(), img.height());
  if (r.empty()) throw Error(ErrorCode::InvalidArgument, "isodata on empty region");
  const auto h = detail::histogram(img, r);
  double total = 0, sum = 0;
  for (int v = 0; v < 256; ++v) {
    total += static_cast<double>(h[static_cast<std::size_t>(v)]);
    sum += static_cast<double>(h[static_cast<std::size_t>(v)]) * v;
  }
  int t = detail::round_half_up(sum / total);
  // Stops once the update moves less than half an intensity level.
  for (int round = 0; round < 100; ++round) {
    const int next = detail::round_half_up(isodata_midpoint(h, t));
    if (next == t) break;
    t = next;
  }
  return std::clamp(t, 0, 255);
}

inline int isodata_threshold(const GrayImage& img) { return isodata_threshold(img, img.bounds()); }

inline BinaryImage segment(const GrayImage& img, int threshold) {
  if (threshold < 0 || threshold > 255) throw Error(ErrorCode::InvalidArgument, "threshold outside [0,255]");
  BinaryImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.set(x, y, img.at(x, y) <= threshold);
  }
  return out;
}

/// 8-connected labeling of the foreground. Regions are ordered by pixel
/// count (descending), then y_min, then x_min.
inline std::vector<Region> connected_components(const BinaryImage& bin) {
  const int w = bin.width();
  const int h = bin.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
  std::vector<Region> regions;
  std::vector<std::pair<int, int>> stack;
  int next_label = 1;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!bin.at(x0, y0) || labels[static_cast<std::size_t>(y0) * w + x0] != 0) continue;
      Region reg;
      reg.label = next_label;
      reg.bounding_box = {x0, y0, x0, y0};
      double sx = 0, sy = 0;
      stack.clear();
      stack.emplace_back(x0, y0);
      labels[static_cast<std::size_t>(y0) * w + x0] = next_label;
      while (!stack.empty()) {
        const auto [x, y] = stack.back();
        stack.pop_back();
        ++reg.pixel_count;
        sx += x;
        sy += y;
        auto& bb = reg.bounding_box;
        bb.x_min = std::min(bb.x_min, x);
        bb.x_max = std::max(bb.x_max, x);
        bb.y_min = std::min(bb.y_min, y);
        bb.y_max = std::max(bb.y_max, y);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            auto& l = labels[static_cast<std::size_t>(ny) * w + nx];
            if (l == 0 && bin.at(nx, ny)) {
              l = next_label;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      reg.centroid_x = sx / static_cast<double>(reg.pixel_count);
      reg.centroid_y = sy / static_cast<double>(reg.pixel_count);
      regions.push_back(reg);
      ++next_label;
    }
  }
  std::stable_sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) {
    if (a.pixel_count != b.pixel_count) return a.pixel_count > b.pixel_count;
    if (a.bounding_box.y_min != b.bounding_box.y_min) return a.bounding_box.y_min < b.bounding_box.y_min;
    return a.bounding_box.x_min < b.bounding_box.x_min;
  });
  return regions;
}

/// 3x3 Sobel. Border pixels carry zero gradient.
inline GradientMap sobel(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) throw Error(ErrorCode::ImageTooSmall, "sobel needs at least 3x3 pixels");
  GradientMap g;
  g.width = w;
  g.height = h;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  g.gx.assign(n, 0.0f);
  g.gy.assign(n, 0.0f);
  g.magnitude.assign(n, 0.0f);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const int p00 = img.at(x - 1, y - 1), p10 = img.at(x, y - 1), p20 = img.at(x + 1, y - 1);
      const int p01 = img.at(x - 1, y), p21 = img.at(x + 1, y);
      const int p02 = img.at(x - 1, y + 1), p12 = img.at(x, y + 1), p22 = img.at(x + 1, y + 1);
      const int gx = (p20 + 2 * p21 + p22) - (p00 + 2 * p01 + p02);
      const int gy = (p02 + 2 * p12 + p22) - (p00 + 2 * p10 + p20);
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.gx[i] = static_cast<float>(gx);
      g.gy[i] = static_cast<float>(gy);
      g.magnitude[i] = static_cast<float>(std::sqrt(static_cast<double>(gx) * gx + static_cast<double>(gy) * gy));
    }
  }
  return g;
}

}  // namespace gazetrack
