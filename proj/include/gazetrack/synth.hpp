#pragma once

// Synthetic eye renderer with exact ground truth. The scene is skin, an
// eyebrow, an almond eye opening bounded by two parabolic lids through the
// corners, sclera, iris and pupil, a lash band above the upper lid, and
// additive Gaussian noise. Noise is keyed on scene coordinates, so a
// translated scene is a pixel-exact shift of the untranslated one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "gazetrack/corner.hpp"
#include "gazetrack/error.hpp"
#include "gazetrack/gaze.hpp"
#include "gazetrack/image.hpp"
#include "gazetrack/iris.hpp"

namespace gazetrack {

struct EyeIntensities {
  int sclera = 230;
  int skin = 180;
  int iris = 60;
  int pupil = 20;
  int eyebrow = 50;
  int lash = 30;        // lash band value at the lid
  int lash_fade = 150;  // lash band value at its top
};

struct SyntheticEyeSpec {
  int width = 640;
  int height = 480;
  Vec2 iris_center{320.0, 250.0};
  double iris_radius = 40.0;
  double pupil_radius = 16.0;
  Vec2 corner_temporal{420.0, 255.0};  // image right
  Vec2 corner_nasal{220.0, 255.0};     // image left
  double eyelid_coverage = 0.15;       // fraction of the iris diameter hidden by the upper lid
  PixelBox eyebrow_box{190, 130, 450, 165};
  EyeIntensities intensities;
  double noise_sigma = 2.0;
  std::uint64_t seed = 1;
  // Rigid integer translation of the whole scene (head motion).
  int offset_x = 0;
  int offset_y = 0;
  // Scene constants below are not varied by the tools but kept explicit.
  double lower_lid_margin = 6.0;  // sclera gap below the iris at the iris column, px
  int lash_gap = 1;               // skin rows between upper lid and lash band
  int lash_thickness = 16;

  void validate() const {
    const auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidSpec, m); };
    if (width < 16 || height < 16) bad("image too small");
    if (!(iris_radius > 0) || !(pupil_radius > 0) || pupil_radius >= iris_radius) bad("need 0 < pupil_radius < iris_radius");
    const Vec2 c = iris_center + Vec2{static_cast<double>(offset_x), static_cast<double>(offset_y)};
    if (c.x - iris_radius < 0 || c.y - iris_radius < 0 || c.x + iris_radius > width - 1 || c.y + iris_radius > height - 1) {
      bad("iris disk outside image");
    }
    const auto& in = intensities;
    if (!(in.sclera > in.skin && in.skin > in.iris && in.iris > in.pupil)) bad("need sclera > skin > iris > pupil");
    for (int v : {in.sclera, in.skin, in.iris, in.pupil, in.eyebrow, in.lash, in.lash_fade}) {
      if (v < 0 || v > 255) bad("intensity outside [0,255]");
    }
    if (!(eyelid_coverage >= 0.0 && eyelid_coverage <= 0.9)) bad("eyelid_coverage outside [0, 0.9]");
    if (!(corner_temporal.x > corner_nasal.x + 4)) bad("temporal corner must be right of the nasal corner");
    if (!(noise_sigma >= 0)) bad("negative noise sigma");
    if (eyebrow_box.empty()) bad("empty eyebrow box");
  }
};

struct SyntheticTruth {
  Circle iris;
  Vec2 corner_temporal;
  Vec2 corner_nasal;
  double eyelid_coverage = 0.0;

  Vec2 corner(CornerSide side) const { return side == CornerSide::Temporal ? corner_temporal : corner_nasal; }
};

struct SyntheticEye {
  GrayImage image;
  SyntheticTruth truth;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Standard normal deviate attached to scene coordinate (x, y).
inline double scene_gaussian(std::uint64_t seed, int x, int y) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
                                                          static_cast<std::uint32_t>(y)));
  const std::uint64_t k2 = splitmix64(key);
  const double u1 = (static_cast<double>(key >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(k2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

/// Lid geometry of a spec in scene (untranslated) coordinates.
struct EyeLids {
  double x_left, x_right;
  double y_left, y_right;
  double h_upper, h_lower;

  double t(double x) const { return (2.0 * x - x_left - x_right) / (x_right - x_left); }
  double base(double x) const { return y_left + (y_right - y_left) * (x - x_left) / (x_right - x_left); }
  double upper(double x) const {
    const double tt = t(x);
    return base(x) - h_upper * (1.0 - tt * tt);
  }
  double lower(double x) const {
    const double tt = t(x);
    return base(x) + h_lower * (1.0 - tt * tt);
  }
};

/// The lids are anchored at the iris column: the upper lid crosses it
/// eyelid_coverage * 2R below the iris top and the lower lid passes
/// lower_lid_margin below the iris bottom. Iris columns far off center
/// (|t| > 0.5) anchor at t = +-0.5 instead.
inline EyeLids eye_lids(const SyntheticEyeSpec& s) {
  EyeLids l{s.corner_nasal.x, s.corner_temporal.x, s.corner_nasal.y, s.corner_temporal.y, 0, 0};
  const double mid = 0.5 * (l.x_left + l.x_right);
  const double half = 0.5 * (l.x_right - l.x_left);
  const double ax = std::clamp(s.iris_center.x, mid - 0.5 * half, mid + 0.5 * half);
  const double tt = l.t(ax);
  const double shape = 1.0 - tt * tt;
  const double lid_y = s.iris_center.y - s.iris_radius + 2.0 * s.eyelid_coverage * s.iris_radius;
  const double low_y = s.iris_center.y + s.iris_radius + s.lower_lid_margin;
  l.h_upper = (l.base(ax) - lid_y) / shape;
  l.h_lower = (low_y - l.base(ax)) / shape;
  return l;
}

inline SyntheticEye render(const SyntheticEyeSpec& spec) {
  spec.validate();
  const EyeLids lids = eye_lids(spec);
  const auto& in = spec.intensities;
  const double R2 = spec.iris_radius * spec.iris_radius;
  const double P2 = spec.pupil_radius * spec.pupil_radius;
  const auto& eb = spec.eyebrow_box;
  const double eb_cx = 0.5 * (eb.x_min + eb.x_max);
  const double eb_cy = 0.5 * (eb.y_min + eb.y_max);
  const double eb_rx = 0.5 * eb.width();
  const double eb_ry = 0.5 * eb.height();

  SyntheticEye out;
  out.image = GrayImage(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y) {
    const int ly = y - spec.offset_y;
    for (int x = 0; x < spec.width; ++x) {
      const int lx = x - spec.offset_x;
      double v = in.skin;
      const double ex = (lx - eb_cx) / eb_rx;
      const double ey = (ly - eb_cy) / eb_ry;
      if (ex * ex + ey * ey <= 1.0) v = in.eyebrow;
      if (lx >= lids.x_left && lx <= lids.x_right) {
        const double up = lids.upper(lx);
        const double lo = lids.lower(lx);
        if (ly > up && ly < lo) {
          const double dx = lx - spec.iris_center.x;
          const double dy = ly - spec.iris_center.y;
          const double r2 = dx * dx + dy * dy;
          v = r2 <= P2 ? in.pupil : (r2 <= R2 ? in.iris : in.sclera);
        } else if (ly <= up - spec.lash_gap && ly > up - spec.lash_gap - spec.lash_thickness) {
          const double k = (up - spec.lash_gap - ly) / spec.lash_thickness;  // 0 at the lid, 1 at the top
          v = in.lash + (in.lash_fade - in.lash) * k;
        }
      }
      if (spec.noise_sigma > 0) v += spec.noise_sigma * detail::scene_gaussian(spec.seed, lx, ly);
      out.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  const Vec2 off{static_cast<double>(spec.offset_x), static_cast<double>(spec.offset_y)};
  out.truth.iris = {spec.iris_center.x + off.x, spec.iris_center.y + off.y, spec.iris_radius};
  out.truth.corner_temporal = spec.corner_temporal + off;
  out.truth.corner_nasal = spec.corner_nasal + off;
  out.truth.eyelid_coverage = spec.eyelid_coverage;
  return out;
}

/// FNV-1a over the printed spec; identifies the exact scene in manifests.
inline std::string spec_hash(const SyntheticEyeSpec& s) {
  char buf[512];
  const auto& in = s.intensities;
  std::snprintf(buf, sizeof buf,
                "%d %d %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %d %d %d %d %d %d %d %d %d %d %d %.17g "
                "%llu %d %d %.17g %d %d",
                s.width, s.height, s.iris_center.x, s.iris_center.y, s.iris_radius, s.pupil_radius,
                s.corner_temporal.x, s.corner_temporal.y, s.corner_nasal.x, s.corner_nasal.y, s.eyelid_coverage,
                s.eyebrow_box.x_min, s.eyebrow_box.y_min, s.eyebrow_box.x_max, s.eyebrow_box.y_max, in.sclera,
                in.skin, in.iris, in.pupil, in.eyebrow, in.lash, in.lash_fade, s.noise_sigma,
                static_cast<unsigned long long>(s.seed), s.offset_x, s.offset_y, s.lower_lid_margin, s.lash_gap,
                s.lash_thickness);
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

struct SweepItem {
  SyntheticEyeSpec spec;
  Vec2 target;     // screen px
  Vec2 delta_mm;   // iris displacement from the reference gaze, up positive
  Vec2 g_mm;       // gaze displacement on the screen plane, up positive
};

/// Gaze displacement (mm, y up) of a screen target relative to the
/// reference screen point.
inline Vec2 screen_to_gaze_mm(const Vec2& target, const Vec2& reference, const ScreenGeometry& screen) {
  return {(target.x - reference.x) * screen.mm_per_px, -(target.y - reference.y) * screen.mm_per_px};
}

/// For every target, inverts the eyeball model (delta = r_ball sin(atan(g/d)))
/// and moves the iris of `base` (which looks at `reference`) accordingly.
/// Pixel scale follows the physical iris radius: r_iris_mm / iris_radius px.
inline std::vector<SweepItem> gaze_sweep_specs(const SyntheticEyeSpec& base, const EyeballModel& model,
                                               const std::vector<Vec2>& targets, const ScreenGeometry& screen,
                                               const Vec2& reference) {
  model.validate();
  const double px_to_mm = model.r_iris_mm / base.iris_radius;
  std::vector<SweepItem> items;
  items.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Vec2& t = targets[i];
    if (t.x < 0 || t.y < 0 || t.x >= screen.width || t.y >= screen.height) {
      throw Error(ErrorCode::TargetUnreachable, "target off screen");
    }
    SweepItem item;
    item.target = t;
    item.g_mm = screen_to_gaze_mm(t, reference, screen);
    item.delta_mm = {delta_from_gaze(item.g_mm.x, model), delta_from_gaze(item.g_mm.y, model)};
    if (std::abs(item.delta_mm.x) >= model.r_ball || std::abs(item.delta_mm.y) >= model.r_ball) {
      throw Error(ErrorCode::TargetUnreachable, "required displacement exceeds r_ball");
    }
    item.spec = base;
    item.spec.iris_center = base.iris_center + Vec2{item.delta_mm.x / px_to_mm, -item.delta_mm.y / px_to_mm};
    item.spec.seed = base.seed + i;
    try {
      item.spec.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::TargetUnreachable, std::string("iris leaves the image: ") + e.what());
    }
    const EyeLids lids = eye_lids(item.spec);
    if (std::abs(lids.t(item.spec.iris_center.x)) > 0.5) {
      throw Error(ErrorCode::TargetUnreachable, "iris leaves the eye opening");
    }
    items.push_back(item);
  }
  return items;
}

inline std::vector<std::pair<SweepItem, SyntheticEye>> render_gaze_sweep(const SyntheticEyeSpec& base,
                                                                         const EyeballModel& model,
                                                                         const std::vector<Vec2>& targets,
                                                                         const ScreenGeometry& screen,
                                                                         const Vec2& reference) {
  std::vector<std::pair<SweepItem, SyntheticEye>> out;
  for (auto& item : gaze_sweep_specs(base, model, targets, screen, reference)) {
    SyntheticEye eye = render(item.spec);
    out.emplace_back(std::move(item), std::move(eye));
  }
  return out;
}

/// Evenly spaced cols x rows grid of targets, `margin` (fraction) in from
/// the screen edges, row-major from the top-left.
inline std::vector<Vec2> target_grid(int cols, int rows, const ScreenGeometry& screen, double margin = 0.1) {
  std::vector<Vec2> out;
  const auto at = [&](int i, int n, int extent) {
    if (n == 1) return 0.5 * extent;
    return extent * (margin + (1.0 - 2.0 * margin) * i / (n - 1));
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.push_back({at(c, cols, screen.width), at(r, rows, screen.height)});
  }
  return out;
}

/// Bottom-left and top-right calibration crosses, 5% in from the edges.
inline std::pair<Vec2, Vec2> calibration_crosses(const ScreenGeometry& screen) {
  return {{0.05 * screen.width, 0.95 * screen.height}, {0.95 * screen.width, 0.05 * screen.height}};
}

enum class FailureMode { HeavyOcclusion, OffFrameIris };

inline SyntheticEyeSpec failure_case_spec(SyntheticEyeSpec spec, FailureMode mode) {
  if (mode == FailureMode::HeavyOcclusion) {
    spec.eyelid_coverage = std::max(spec.eyelid_coverage, 0.6);
  } else {
    // Iris centered on the temporal corner: most of it sits under the skin.
    spec.iris_center.x = spec.corner_temporal.x;
  }
  return spec;
}

/// Frames of the kind the tracker is expected to reject.
inline GrayImage render_failure_case(const SyntheticEyeSpec& spec, FailureMode mode) {
  return render(failure_case_spec(spec, mode)).image;
}

}  // namespace gazetrack
