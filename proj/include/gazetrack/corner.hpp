#pragma once

// Eye-corner detection. The corner column is where the vertical variance
// projection collapses (largest jump of its derivative); the corner row is
// the eyelid edge at that column, traced as the strongest Sobel response.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/image.hpp"
#include "gazetrack/iris.hpp"

namespace gazetrack {

enum class CornerSide { Temporal, Nasal };

inline std::string to_string(CornerSide s) { return s == CornerSide::Temporal ? "temporal" : "nasal"; }

inline CornerSide corner_side_from_string(const std::string& s) {
  if (s == "temporal") return CornerSide::Temporal;
  if (s == "nasal") return CornerSide::Nasal;
  throw Error(ErrorCode::Parse, "corner side must be 'temporal' or 'nasal', got '" + s + "'");
}

/// Image direction of a side: the temporal corner is taken to be on the
/// image right (+x), the nasal one on the left.
inline int side_direction(CornerSide s) { return s == CornerSide::Temporal ? +1 : -1; }

struct CornerPoint {
  double x = 0.0;
  double y = 0.0;
  CornerSide side = CornerSide::Temporal;
};

struct VpfProfile {
  int x_min = 0, x_max = -1;
  int y_min = 0, y_max = -1;
  std::vector<double> mean;        // V_m(x)
  std::vector<double> variance;    // sigma_v^2(x)
  std::vector<double> derivative;  // variance[i+1] - variance[i]
};

/// Vertical variance projection over columns [x_min, x_max] and rows
/// [y_min, y_max] (inclusive).
inline VpfProfile vpf(const GrayImage& img, int x_min, int x_max, int y_min, int y_max) {
  if (x_max < x_min || y_max <= y_min) throw Error(ErrorCode::EmptyRange, "vpf needs x_max >= x_min and y_max > y_min");
  if (x_min < 0 || y_min < 0 || x_max >= img.width() || y_max >= img.height()) {
    throw Error(ErrorCode::EmptyRange, "vpf range outside image");
  }
  VpfProfile p{x_min, x_max, y_min, y_max, {}, {}, {}};
  const int n_cols = x_max - x_min + 1;
  const double n_rows = y_max - y_min + 1;
  p.mean.resize(static_cast<std::size_t>(n_cols));
  p.variance.resize(static_cast<std::size_t>(n_cols));
  for (int x = x_min; x <= x_max; ++x) {
    double s = 0;
    for (int y = y_min; y <= y_max; ++y) s += img.at(x, y);
    const double m = s / n_rows;
    double v = 0;
    for (int y = y_min; y <= y_max; ++y) {
      const double d = img.at(x, y) - m;
      v += d * d;
    }
    p.mean[static_cast<std::size_t>(x - x_min)] = m;
    p.variance[static_cast<std::size_t>(x - x_min)] = v / n_rows;
  }
  if (n_cols > 1) {
    p.derivative.resize(static_cast<std::size_t>(n_cols - 1));
    for (int i = 0; i + 1 < n_cols; ++i) {
      p.derivative[static_cast<std::size_t>(i)] = p.variance[static_cast<std::size_t>(i + 1)] - p.variance[static_cast<std::size_t>(i)];
    }
  }
  return p;
}

/// Search rectangle beside the iris: columns from 1.5 R to 3.5 R away from
/// the center on the requested side, rows b - R .. b + R, clamped to the eye
/// region.
inline PixelBox corner_search_area(const Circle& iris, const EyeRegion& eye, CornerSide side) {
  const int dir = side_direction(side);
  const double near_x = iris.a + dir * 1.5 * iris.r;
  const double far_x = iris.a + dir * 3.5 * iris.r;
  PixelBox area{static_cast<int>(std::lround(std::min(near_x, far_x))),
                static_cast<int>(std::lround(iris.b - iris.r)),
                static_cast<int>(std::lround(std::max(near_x, far_x))),
                static_cast<int>(std::lround(iris.b + iris.r))};
  area = area.intersect(eye.bounding_box);
  if (area.empty()) throw Error(ErrorCode::AreaOutsideImage, "corner search area is empty after clamping");
  return area;
}

struct CornerDetection {
  CornerPoint corner;
  PixelBox area;
  VpfProfile profile;
  std::vector<int> eyelid_rows;  // one per area column, median-smoothed
};

inline constexpr double kVarianceFloor = 4.0;

inline CornerDetection detect_corner_detailed(const GrayImage& img, const Circle& iris, const EyeRegion& eye,
                                              CornerSide side) {
  CornerDetection out;
  out.area = corner_search_area(iris, eye, side).clamped(img.width(), img.height());
  const PixelBox& a = out.area;
  if (a.width() < 2 || a.height() < 2) throw Error(ErrorCode::AreaOutsideImage, "corner search area too small");
  out.profile = vpf(img, a.x_min, a.x_max, a.y_min, a.y_max);
  const auto& var = out.profile.variance;
  if (*std::max_element(var.begin(), var.end()) < kVarianceFloor) {
    throw Error(ErrorCode::NoCornerFound, "flat variance profile in corner area");
  }
  const auto& der = out.profile.derivative;
  std::size_t k = 0;
  for (std::size_t i = 1; i < der.size(); ++i) {
    if (std::abs(der[i]) > std::abs(der[k])) k = i;
  }
  // The corner is the last column still carrying eye structure.
  const std::size_t col = var[k] >= var[k + 1] ? k : k + 1;
  const int corner_x = a.x_min + static_cast<int>(col);

  // Eyelid trace: strongest gradient row per column, Sobel evaluated on the
  // area plus a one-pixel frame so that area pixels have full support.
  const PixelBox frame = PixelBox{a.x_min - 1, a.y_min - 1, a.x_max + 1, a.y_max + 1}.clamped(img.width(), img.height());
  const GradientMap g = sobel(img.crop(frame));
  std::vector<int> raw(static_cast<std::size_t>(a.width()));
  for (int x = a.x_min; x <= a.x_max; ++x) {
    int best_y = a.y_min;
    float best = -1.0f;
    for (int y = a.y_min; y <= a.y_max; ++y) {
      const float m = g.mag(x - frame.x_min, y - frame.y_min);
      if (m > best) {
        best = m;
        best_y = y;
      }
    }
    raw[static_cast<std::size_t>(x - a.x_min)] = best_y;
  }
  out.eyelid_rows.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(raw.size() - 1, i + 1);
    std::vector<int> win(raw.begin() + static_cast<std::ptrdiff_t>(lo), raw.begin() + static_cast<std::ptrdiff_t>(hi) + 1);
    std::sort(win.begin(), win.end());
    out.eyelid_rows[i] = win.size() == 3 ? win[1] : (win.front() + win.back()) / 2;
  }
  out.corner = {static_cast<double>(corner_x), static_cast<double>(out.eyelid_rows[col]), side};
  return out;
}

inline CornerPoint detect_corner(const GrayImage& img, const Circle& iris, const EyeRegion& eye, CornerSide side) {
  return detect_corner_detailed(img, iris, eye, side).corner;
}

}  // namespace gazetrack
