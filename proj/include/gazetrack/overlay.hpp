#pragma once

// Diagnostic overlay: eye region, zigzag samples, first and final circle,
// corner search area and corner.

#include <cmath>
#include <numbers>

#include "gazetrack/image_io.hpp"
#include "gazetrack/pipeline.hpp"

namespace gazetrack {

struct Rgb {
  std::uint8_t r, g, b;
};

inline void draw_box(RgbImage& img, const PixelBox& b, Rgb c) {
  for (int x = b.x_min; x <= b.x_max; ++x) {
    img.put(x, b.y_min, c.r, c.g, c.b);
    img.put(x, b.y_max, c.r, c.g, c.b);
  }
  for (int y = b.y_min; y <= b.y_max; ++y) {
    img.put(b.x_min, y, c.r, c.g, c.b);
    img.put(b.x_max, y, c.r, c.g, c.b);
  }
}

inline void draw_circle(RgbImage& img, const Circle& circle, Rgb c) {
  const int n = std::max(16, static_cast<int>(2 * std::numbers::pi * circle.r * 2));
  for (int i = 0; i < n; ++i) {
    const double t = 2 * std::numbers::pi * i / n;
    img.put(static_cast<int>(std::lround(circle.a + circle.r * std::cos(t))),
            static_cast<int>(std::lround(circle.b + circle.r * std::sin(t))), c.r, c.g, c.b);
  }
}

inline void draw_cross(RgbImage& img, double x, double y, int arm, Rgb c) {
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int d = -arm; d <= arm; ++d) {
    img.put(cx + d, cy, c.r, c.g, c.b);
    img.put(cx, cy + d, c.r, c.g, c.b);
  }
}

inline void draw_point(RgbImage& img, const SamplePoint& p, Rgb c) {
  img.put(static_cast<int>(std::floor(p.x)), static_cast<int>(std::lround(p.y)), c.r, c.g, c.b);
  img.put(static_cast<int>(std::ceil(p.x)), static_cast<int>(std::lround(p.y)), c.r, c.g, c.b);
}

inline RgbImage render_overlay(const GrayImage& img, const FrameResult& r, const FrameTrace& tr) {
  RgbImage out(img);
  if (tr.eye) {
    draw_box(out, tr.eye->bounding_box, {0, 200, 0});
    draw_box(out, tr.eye->eyebrow_box, {0, 120, 0});
  }
  if (tr.corner_area) draw_box(out, *tr.corner_area, {0, 200, 200});
  for (const auto& p : tr.samples) draw_point(out, p, {255, 60, 60});
  for (const auto& p : tr.inliers) draw_point(out, p, {255, 230, 0});
  if (tr.first_fit) draw_circle(out, *tr.first_fit, {80, 80, 255});
  if (r.iris) {
    draw_circle(out, *r.iris, {0, 255, 0});
    draw_cross(out, r.iris->a, r.iris->b, 3, {0, 255, 0});
  }
  if (r.corner) draw_cross(out, r.corner->x, r.corner->y, 6, {255, 0, 255});
  return out;
}

}  // namespace gazetrack
