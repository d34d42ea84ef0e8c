#pragma once

// Iris localisation: eye-region selection from the segmented low-resolution
// frame, coarse iris position by window scanning, zigzag boundary sampling
// on the full-resolution frame, and the double (fit, prune, refit) algebraic
// circle fit.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/image.hpp"

namespace gazetrack {

struct Circle {
  double a = 0.0;  // center x
  double b = 0.0;  // center y
  double r = 0.0;  // radius
};

struct SamplePoint {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const SamplePoint&) const = default;
};

struct EyeRegion {
  PixelBox bounding_box;  // full resolution
  PixelBox eyebrow_box;   // full resolution
  int threshold = 0;
};

/// Picks eyebrow and eye among the two largest regions: the upper one
/// (smaller centroid y) is the eyebrow. Boxes are mapped from the segmented
/// image to full resolution by `scale`, grown by `pad` pixels and clamped to
/// `full_width` x `full_height`.
inline EyeRegion locate_eye_region(std::span<const Region> regions, int scale = 1, int pad = 0,
                                   int full_width = std::numeric_limits<int>::max(),
                                   int full_height = std::numeric_limits<int>::max(),
                                   PixelBox* eye_box_unscaled = nullptr) {
  if (regions.size() < 2) {
    throw Error(ErrorCode::InsufficientRegions, "need eyebrow and eye regions, found " +
                                                    std::to_string(regions.size()));
  }
  const Region* eyebrow = &regions[0];
  const Region* eye = &regions[1];
  if (eye->centroid_y < eyebrow->centroid_y) std::swap(eyebrow, eye);
  const auto up = [&](const PixelBox& b) {
    PixelBox out{b.x_min * scale - pad, b.y_min * scale - pad, (b.x_max + 1) * scale - 1 + pad,
                 (b.y_max + 1) * scale - 1 + pad};
    return out.clamped(full_width, full_height);
  };
  if (eye_box_unscaled) *eye_box_unscaled = eye->bounding_box;
  EyeRegion er;
  er.bounding_box = up(eye->bounding_box);
  er.eyebrow_box = up(eyebrow->bounding_box);
  return er;
}

inline EyeRegion locate_eye_region(const BinaryImage& bin, std::span<const Region> regions) {
  return locate_eye_region(regions, 1, 0, bin.width(), bin.height());
}

struct IrisWindow {
  int x = 0;      // left column of the winning window
  int width = 0;
  double center_x() const { return x + 0.5 * (width - 1); }
};

inline int iris_window_width(int eye_width) {
  return static_cast<int>(std::floor(0.15 * eye_width + 0.5));
}

/// Slides a window (eye height x 0.15 eye width) across `eye` in one-pixel
/// steps and returns the leftmost position with the most foreground pixels.
inline IrisWindow scan_iris_window(const BinaryImage& bin, const PixelBox& eye) {
  const PixelBox box = eye.clamped(bin.width(), bin.height());
  const int w = iris_window_width(box.width());
  if (box.empty() || w < 1) throw Error(ErrorCode::EyeRegionTooSmall, "eye region narrower than 7 px");
  std::vector<int> col(static_cast<std::size_t>(box.width()), 0);
  for (int x = box.x_min; x <= box.x_max; ++x) {
    int s = 0;
    for (int y = box.y_min; y <= box.y_max; ++y) s += bin.at(x, y) ? 1 : 0;
    col[static_cast<std::size_t>(x - box.x_min)] = s;
  }
  int sum = 0;
  for (int i = 0; i < w; ++i) sum += col[static_cast<std::size_t>(i)];
  int best = sum;
  int best_x = box.x_min;
  for (int i = 1; i + w <= box.width(); ++i) {
    sum += col[static_cast<std::size_t>(i + w - 1)] - col[static_cast<std::size_t>(i - 1)];
    if (sum > best) {
      best = sum;
      best_x = box.x_min + i;
    }
  }
  return {best_x, w};
}

/// Isodata threshold recomputed on a square of three window widths centered
/// on the coarse iris position (segmented-image coordinates).
inline int refine_threshold(const GrayImage& low, const IrisWindow& window, int center_y) {
  const int half = (3 * window.width) / 2;
  const int cx = static_cast<int>(std::lround(window.center_x()));
  const PixelBox box{cx - half, center_y - half, cx + half, center_y + half};
  return isodata_threshold(low, box.clamped(low.width(), low.height()));
}

/// Middle row of the dark run in column `x` nearest to row `y` (within
/// `box`), or `y` itself when the column has no dark pixel.
inline int dark_run_center(const GrayImage& img, int threshold, int x, int y, const PixelBox& box) {
  const PixelBox b = box.clamped(img.width(), img.height());
  if (b.empty() || x < b.x_min || x > b.x_max) return y;
  const auto dark = [&](int yy) { return yy >= b.y_min && yy <= b.y_max && static_cast<int>(img.at(x, yy)) <= threshold; };
  const int sy = std::clamp(y, b.y_min, b.y_max);
  for (int d = 0; d <= b.height(); ++d) {
    for (int yy : {sy - d, sy + d}) {
      if (!dark(yy)) continue;
      int top = yy, bottom = yy;
      while (dark(top - 1)) --top;
      while (dark(bottom + 1)) ++bottom;
      return (top + bottom) / 2;
    }
  }
  return y;
}

struct ZigzagOptions {
  int max_step = 3;  // columns searched per row before an arc is declared exhausted
};

/// Iris-sclera boundary samples by zigzag scanning. From the dark pixel of
/// the seed column nearest the seed row, a horizontal scan line is extended
/// left and right to the border; the line is then raised (and lowered) one
/// row at a time, each new row's search starting at the previous row's
/// border column. An arc ends when the border is not found within
/// `max_step` columns or the scan leaves `eye`. Samples sit on the
/// dark/bright pixel edge, i.e. half a pixel outside the last dark pixel.
inline std::vector<SamplePoint> extract_samples(const GrayImage& img, int threshold, int seed_x, int seed_y,
                                                const PixelBox& eye, ZigzagOptions opt = {}) {
  const PixelBox box = eye.clamped(img.width(), img.height());
  if (box.empty() || seed_x < box.x_min || seed_x > box.x_max) {
    throw Error(ErrorCode::NoSamples, "seed column outside eye region");
  }
  const auto dark = [&](int x, int y) {
    return box.contains(x, y) && static_cast<int>(img.at(x, y)) <= threshold;
  };

  std::optional<int> start_y;
  const int sy = std::clamp(seed_y, box.y_min, box.y_max);
  for (int d = 0; d <= box.height() && !start_y; ++d) {
    if (dark(seed_x, sy - d)) {
      start_y = sy - d;
    } else if (dark(seed_x, sy + d)) {
      start_y = sy + d;
    }
  }
  if (!start_y) throw Error(ErrorCode::NoSamples, "seed column has no dark pixel");

  std::vector<SamplePoint> samples;
  const int y0 = *start_y;

  // Outermost dark pixel of the run containing (x, y) in direction dir.
  const auto run_end = [&](int x, int y, int dir) {
    while (dark(x + dir, y)) x += dir;
    return x;
  };
  const int left0 = run_end(seed_x, y0, -1);
  const int right0 = run_end(seed_x, y0, +1);
  if (box.contains(left0 - 1, y0)) samples.push_back({left0 - 0.5, static_cast<double>(y0)});
  if (box.contains(right0 + 1, y0)) samples.push_back({right0 + 0.5, static_cast<double>(y0)});

  // dir: -1 for the left arc, +1 for the right arc. dy: row step.
  const auto trace = [&](int x_prev, int dir, int dy) {
    for (int y = y0 + dy; y >= box.y_min && y <= box.y_max; y += dy) {
      std::optional<int> found;
      if (dark(x_prev, y)) {
        int x = x_prev;
        int steps = 0;
        while (dark(x + dir, y) && steps <= opt.max_step) {
          x += dir;
          ++steps;
        }
        if (steps <= opt.max_step) found = x;
      } else {
        for (int step = 1; step <= opt.max_step; ++step) {
          if (dark(x_prev - dir * step, y)) {
            found = x_prev - dir * step;
            break;
          }
        }
      }
      if (!found) return;
      const int x = *found;
      if (!box.contains(x + dir, y)) return;  // border not inside the eye region
      samples.push_back({x + 0.5 * dir, static_cast<double>(y)});
      x_prev = x;
    }
  };
  trace(left0, -1, -1);
  trace(left0, -1, +1);
  trace(right0, +1, -1);
  trace(right0, +1, +1);
  return samples;
}

/// Moment sums of the linearised circle equation z + Bx + Cy + D = 0 with
/// z = x^2 + y^2. Sums are taken about (origin_x, origin_y), the sample mean,
/// to keep the normal equations well conditioned.
struct MomentSystem {
  double origin_x = 0, origin_y = 0;
  double mxx = 0, mxy = 0, myy = 0, mx = 0, my = 0;
  double mxz = 0, myz = 0, mz = 0;
  double n = 0;
  double B = 0, C = 0, D = 0;

  /// Row-major 3x3 normal matrix.
  std::array<double, 9> matrix() const { return {mxx, mxy, mx, mxy, myy, my, mx, my, n}; }
  std::array<double, 3> rhs() const { return {-mxz, -myz, -mz}; }
};

inline MomentSystem build_moments(std::span<const SamplePoint> samples) {
  MomentSystem m;
  m.n = static_cast<double>(samples.size());
  if (samples.empty()) return m;
  for (const auto& p : samples) {
    m.origin_x += p.x;
    m.origin_y += p.y;
  }
  m.origin_x /= m.n;
  m.origin_y /= m.n;
  for (const auto& p : samples) {
    const double x = p.x - m.origin_x;
    const double y = p.y - m.origin_y;
    const double z = x * x + y * y;
    m.mxx += x * x;
    m.mxy += x * y;
    m.myy += y * y;
    m.mx += x;
    m.my += y;
    m.mxz += x * z;
    m.myz += y * z;
    m.mz += z;
  }
  return m;
}

/// Solves the symmetric positive-definite 3x3 system by Cholesky (LL^T).
/// Returns nullopt when a pivot collapses relative to the matrix scale.
inline std::optional<std::array<double, 3>> cholesky_solve3(const std::array<double, 9>& a,
                                                            const std::array<double, 3>& rhs) {
  double scale = 0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (!(scale > 0) || !std::isfinite(scale)) return std::nullopt;
  const double eps = 1e-12 * scale;
  std::array<double, 9> l{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i * 3 + j)];
      for (int k = 0; k < j; ++k) s -= l[static_cast<std::size_t>(i * 3 + k)] * l[static_cast<std::size_t>(j * 3 + k)];
      if (i == j) {
        if (s <= eps) return std::nullopt;
        l[static_cast<std::size_t>(i * 3 + i)] = std::sqrt(s);
      } else {
        l[static_cast<std::size_t>(i * 3 + j)] = s / l[static_cast<std::size_t>(j * 3 + j)];
      }
    }
  }
  std::array<double, 3> y{};
  for (int i = 0; i < 3; ++i) {
    double s = rhs[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= l[static_cast<std::size_t>(i * 3 + k)] * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i * 3 + i)];
  }
  std::array<double, 3> x{};
  for (int i = 2; i >= 0; --i) {
    double s = y[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < 3; ++k) s -= l[static_cast<std::size_t>(k * 3 + i)] * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / l[static_cast<std::size_t>(i * 3 + i)];
  }
  return x;
}

/// Algebraic (Kasa) circle fit: minimises sum (z + Bx + Cy + D)^2, then
/// a = -B/2, b = -C/2, R = sqrt(a^2 + b^2 - D).
inline Circle fit_circle_algebraic(std::span<const SamplePoint> samples, MomentSystem* out_moments = nullptr) {
  if (samples.size() < 3) throw Error(ErrorCode::DegenerateSamples, "need at least 3 samples");
  MomentSystem m = build_moments(samples);
  const auto sol = cholesky_solve3(m.matrix(), m.rhs());
  if (!sol) throw Error(ErrorCode::DegenerateSamples, "moment matrix is singular (collinear or coincident samples)");
  m.B = (*sol)[0];
  m.C = (*sol)[1];
  m.D = (*sol)[2];
  const double a = -m.B / 2.0;
  const double b = -m.C / 2.0;
  const double r2 = a * a + b * b - m.D;
  if (!(r2 > 0) || !std::isfinite(r2)) throw Error(ErrorCode::DegenerateSamples, "non-positive squared radius");
  if (out_moments) *out_moments = m;
  return {a + m.origin_x, b + m.origin_y, std::sqrt(r2)};
}

inline double radial_residual(const Circle& c, const SamplePoint& p) {
  return std::hypot(p.x - c.a, p.y - c.b) - c.r;
}

/// Geometric objective: sum of squared point-to-circle distances.
inline double geometric_objective(const Circle& c, std::span<const SamplePoint> samples) {
  double f = 0;
  for (const auto& p : samples) {
    const double d = radial_residual(c, p);
    f += d * d;
  }
  return f;
}

struct DoubleCircleFit {
  Circle first;
  Circle circle;
  std::vector<SamplePoint> inliers;
  std::vector<SamplePoint> outliers;
};

/// Fit, prune, refit. After the first fit a sample is dropped when it lies
/// more than 0.1 R beyond the circle (far from the center) or more than
/// max(2 sigma, 0.1 R) inside it, sigma being the RMS radial residual. One
/// pruning round, then the survivors are refit.
inline DoubleCircleFit double_circle_fit(std::span<const SamplePoint> samples) {
  if (samples.size() < 6) throw Error(ErrorCode::DegenerateSamples, "double circle fit needs at least 6 samples");
  DoubleCircleFit out;
  out.first = fit_circle_algebraic(samples);
  double ss = 0;
  for (const auto& p : samples) {
    const double d = radial_residual(out.first, p);
    ss += d * d;
  }
  const double sigma = std::sqrt(ss / static_cast<double>(samples.size()));
  const double outer = 0.1 * out.first.r;
  const double inner = std::max(2.0 * sigma, 0.1 * out.first.r);
  for (const auto& p : samples) {
    const double d = radial_residual(out.first, p);
    if (d <= outer && d >= -inner) {
      out.inliers.push_back(p);
    } else {
      out.outliers.push_back(p);
    }
  }
  if (out.inliers.size() < 3) throw Error(ErrorCode::TooFewInliers, "fewer than 3 samples survive pruning");
  out.circle = fit_circle_algebraic(out.inliers);
  return out;
}

}  // namespace gazetrack
