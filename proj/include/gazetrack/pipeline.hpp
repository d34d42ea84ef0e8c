#pragma once

// Per-frame gaze pipeline: eye region, iris circle, eye corner, gaze.
// process_frame never throws; every failure becomes a FrameStatus.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "gazetrack/corner.hpp"
#include "gazetrack/error.hpp"
#include "gazetrack/gaze.hpp"
#include "gazetrack/image.hpp"
#include "gazetrack/iris.hpp"

namespace gazetrack {

enum class FrameStatus { Ok, IrisOcclusion, NoEye, NoCorner, NotCalibrated };

inline std::string to_string(FrameStatus s) {
  switch (s) {
    case FrameStatus::Ok: return "Ok";
    case FrameStatus::IrisOcclusion: return "IrisOcclusion";
    case FrameStatus::NoEye: return "NoEye";
    case FrameStatus::NoCorner: return "NoCorner";
    case FrameStatus::NotCalibrated: return "NotCalibrated";
  }
  return "?";
}

inline FrameStatus frame_status_from_string(const std::string& s) {
  for (auto st : {FrameStatus::Ok, FrameStatus::IrisOcclusion, FrameStatus::NoEye, FrameStatus::NoCorner,
                  FrameStatus::NotCalibrated}) {
    if (to_string(st) == s) return st;
  }
  throw Error(ErrorCode::Parse, "unknown frame status '" + s + "'");
}

struct FrameResult {
  std::uint64_t frame_id = 0;
  double t_ms = 0.0;
  std::optional<Circle> iris;
  std::optional<CornerPoint> corner;
  std::optional<Vec2> delta;  // mm, y up
  std::optional<ScreenPoint> screen;
  FrameStatus status = FrameStatus::NoEye;
  int inlier_count = 0;
  double proc_us = 0.0;
};

struct PipelineConfig {
  int factor = 8;
  CornerSide side = CornerSide::Temporal;
  ZigzagOptions zigzag;
  ScreenGeometry screen;
  EyeballModel model;
  int smoothing_window = 1;
  int port = 8008;
};

/// Intermediate products of one frame, for overlays and diagnostics.
struct FrameTrace {
  int threshold = -1;
  int refined_threshold = -1;
  std::optional<EyeRegion> eye;
  std::optional<IrisWindow> window;  // segmented-image coordinates
  std::vector<SamplePoint> samples;
  std::optional<Circle> first_fit;
  std::vector<SamplePoint> inliers;
  std::optional<PixelBox> corner_area;
  double coverage = 0.0;
  std::string failure;
};

/// Minimum inlier count for a credible iris: a fully visible border gives
/// about two samples per row over 2R rows, and a quarter of that is required.
inline int min_inliers(double radius) { return std::max(6, static_cast<int>(std::ceil(radius))); }

/// Fraction of the iris diameter hidden above the visible dark run through
/// the iris center column. The run is entered from below, where the lower
/// iris is visible, so dark lashes above the lid are not mistaken for iris.
inline double upper_lid_coverage(const GrayImage& img, int threshold, const Circle& iris, const PixelBox& eye) {
  const PixelBox b = eye.clamped(img.width(), img.height());
  const int x = static_cast<int>(std::lround(iris.a));
  const int y = std::clamp(static_cast<int>(std::lround(iris.b + 0.8 * iris.r)), b.y_min, b.y_max);
  if (b.empty() || x < b.x_min || x > b.x_max) return 1.0;
  const auto dark = [&](int yy) { return yy >= b.y_min && yy <= b.y_max && static_cast<int>(img.at(x, yy)) <= threshold; };
  int top = y;
  while (top >= b.y_min && !dark(top)) --top;
  if (top < b.y_min) return 1.0;
  while (dark(top - 1)) --top;
  return std::clamp((top - 0.5 - (iris.b - iris.r)) / (2.0 * iris.r), 0.0, 1.0);
}

/// Frames whose upper lid hides more than this share of the iris diameter
/// are reported as occluded.
inline constexpr double kMaxLidCoverage = 0.55;

namespace detail {

inline FrameResult process_frame_impl(const GrayImage& input, const CalibrationMap* cal, const PipelineConfig& cfg,
                                      FrameTrace* trace) {
  FrameResult r;
  FrameTrace local;
  FrameTrace& tr = trace ? *trace : local;
  const auto fail = [&](FrameStatus st, const std::string& why) {
    r.status = st;
    tr.failure = why;
    return r;
  };

  const int f = cfg.factor;
  if (f < 1) return fail(FrameStatus::NoEye, "invalid downsample factor");
  const int w = input.width() / f * f;
  const int h = input.height() / f * f;
  if (w < 2 * f || h < 2 * f) return fail(FrameStatus::NoEye, "image too small");
  const GrayImage img = (w == input.width() && h == input.height()) ? input : input.crop({0, 0, w - 1, h - 1});

  // Eye region on the downsampled image.
  const GrayImage low = downsample(img, f);
  tr.threshold = isodata_threshold(low);
  const BinaryImage bin = segment(low, tr.threshold);
  const std::vector<Region> regions = connected_components(bin);
  PixelBox eye_low;
  try {
    tr.eye = locate_eye_region(regions, f, f, w, h, &eye_low);
  } catch (const Error& e) {
    return fail(FrameStatus::NoEye, e.what());
  }
  tr.eye->threshold = tr.threshold;

  // Iris.
  Circle iris;
  try {
    const IrisWindow win = scan_iris_window(bin, eye_low);
    tr.window = win;
    const int center_y_low = (eye_low.y_min + eye_low.y_max) / 2;
    tr.refined_threshold = refine_threshold(low, win, center_y_low);
    tr.eye->threshold = tr.refined_threshold;
    const int seed_x = static_cast<int>(std::lround(win.center_x() * f + (f - 1) / 2.0));
    const int seed_y = dark_run_center(img, tr.refined_threshold, seed_x,
                                       (tr.eye->bounding_box.y_min + tr.eye->bounding_box.y_max) / 2,
                                       tr.eye->bounding_box);
    tr.samples = extract_samples(img, tr.refined_threshold, seed_x, seed_y, tr.eye->bounding_box, cfg.zigzag);
    const DoubleCircleFit fit = double_circle_fit(tr.samples);
    tr.first_fit = fit.first;
    tr.inliers = fit.inliers;
    iris = fit.circle;
    r.inlier_count = static_cast<int>(fit.inliers.size());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EyeRegionTooSmall) return fail(FrameStatus::NoEye, e.what());
    return fail(FrameStatus::IrisOcclusion, e.what());
  }
  if (!std::isfinite(iris.a) || !std::isfinite(iris.b) || !std::isfinite(iris.r) ||
      !tr.eye->bounding_box.contains(static_cast<int>(std::floor(iris.a)), static_cast<int>(std::floor(iris.b)))) {
    return fail(FrameStatus::IrisOcclusion, "fitted center outside the eye region");
  }
  if (r.inlier_count < min_inliers(iris.r)) return fail(FrameStatus::IrisOcclusion, "insufficient sample points");
  tr.coverage = upper_lid_coverage(img, tr.refined_threshold, iris, tr.eye->bounding_box);
  if (tr.coverage > kMaxLidCoverage) return fail(FrameStatus::IrisOcclusion, "iris mostly hidden by the eyelid");
  r.iris = iris;

  // Corner.
  try {
    const CornerDetection cd = detect_corner_detailed(img, iris, *tr.eye, cfg.side);
    tr.corner_area = cd.area;
    r.corner = cd.corner;
  } catch (const Error& e) {
    return fail(FrameStatus::NoCorner, e.what());
  }

  // Gaze.
  if (!cal || !(cal->px_to_mm > 0)) return fail(FrameStatus::NotCalibrated, "no calibration");
  try {
    r.delta = displacement(*r.iris, *r.corner, cal);
    const GazeEstimate g = gaze_from_delta(*r.delta, cal->model);
    r.screen = to_screen(g.g, cal, cfg.screen.width, cfg.screen.height);
  } catch (const Error& e) {
    r.delta.reset();
    r.screen.reset();
    return fail(FrameStatus::NotCalibrated, e.what());
  }
  r.status = FrameStatus::Ok;
  return r;
}

}  // namespace detail

inline FrameResult process_frame(const GrayImage& img, const CalibrationMap* cal, const PipelineConfig& cfg = {},
                                 FrameTrace* trace = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  FrameResult r;
  try {
    r = detail::process_frame_impl(img, cal, cfg, trace);
  } catch (const std::exception& e) {
    r = FrameResult{};
    r.status = FrameStatus::NoEye;
    if (trace) trace->failure = e.what();
  }
  r.proc_us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Corner -> iris vectors and iris radii gathered while one cross is shown.
struct CalibrationWindow {
  Vec2 cross;
  std::vector<Vec2> vectors;
  std::vector<double> radii;
  int frames = 0;

  void add(const FrameResult& r) {
    ++frames;
    if (!r.iris || !r.corner) return;
    vectors.push_back(corner_to_iris(*r.iris, *r.corner));
    radii.push_back(r.iris->r);
  }
  int valid() const { return static_cast<int>(vectors.size()); }
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

inline constexpr int kCalibrationDwell = 30;
inline constexpr int kCalibrationMinValid = 10;

/// Builds a calibration from two dwell windows using per-axis medians of
/// the corner -> iris vectors and the median radius over both windows.
inline CalibrationMap calibrate_from_windows(const CalibrationWindow& a, const CalibrationWindow& b,
                                             const EyeballModel& model, int min_valid = kCalibrationMinValid) {
  if (a.valid() < min_valid || b.valid() < min_valid) {
    throw Error(ErrorCode::CalibrationFailed, "too few valid frames per cross (" + std::to_string(a.valid()) + ", " +
                                                  std::to_string(b.valid()) + ")");
  }
  const auto med_vec = [](const CalibrationWindow& w) {
    std::vector<double> xs, ys;
    for (const auto& v : w.vectors) {
      xs.push_back(v.x);
      ys.push_back(v.y);
    }
    return Vec2{detail::median(xs), detail::median(ys)};
  };
  std::vector<double> radii = a.radii;
  radii.insert(radii.end(), b.radii.begin(), b.radii.end());
  try {
    return calibrate({med_vec(a), a.cross}, {med_vec(b), b.cross}, model, detail::median(radii));
  } catch (const Error& e) {
    throw Error(ErrorCode::CalibrationFailed, e.what());
  }
}

struct BenchReport {
  std::size_t frames = 0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
  double fps = 0.0;
  std::string checksum;
  std::size_t ok = 0;
};

/// Order-sensitive digest of the deterministic part of a result.
inline std::uint64_t result_digest(std::uint64_t h, const FrameResult& r) {
  const auto mix = [&h](double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    h = (h ^ bits) * 1099511628211ULL;
  };
  mix(static_cast<double>(r.status));
  mix(r.inlier_count);
  if (r.iris) {
    mix(r.iris->a);
    mix(r.iris->b);
    mix(r.iris->r);
  }
  if (r.corner) {
    mix(r.corner->x);
    mix(r.corner->y);
  }
  if (r.screen) {
    mix(r.screen->p.x);
    mix(r.screen->p.y);
  }
  return h;
}

/// Processes the frames round-robin until at least `min_frames` results
/// (and at least `repetitions` passes) have been produced.
inline BenchReport bench(const std::vector<GrayImage>& frames, const CalibrationMap* cal, const PipelineConfig& cfg,
                         int repetitions = 1, std::size_t min_frames = 1000) {
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "bench needs at least one frame");
  const std::size_t total = std::max(min_frames, frames.size() * static_cast<std::size_t>(std::max(1, repetitions)));
  std::vector<double> lat;
  lat.reserve(total);
  std::uint64_t h = 1469598103934665603ULL;
  BenchReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < total; ++i) {
    const auto s = std::chrono::steady_clock::now();
    const FrameResult r = process_frame(frames[i % frames.size()], cal, cfg);
    lat.push_back(std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - s).count());
    h = result_digest(h, r);
    if (r.status == FrameStatus::Ok || r.status == FrameStatus::NotCalibrated) ++rep.ok;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.frames = total;
  double sum = 0;
  for (double v : lat) sum += v;
  rep.mean_us = sum / static_cast<double>(total);
  std::sort(lat.begin(), lat.end());
  rep.median_us = detail::median(lat);
  rep.p99_us = lat[std::min(total - 1, static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(total))) - 1)];
  rep.fps = wall > 0 ? static_cast<double>(total) / wall : 0.0;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  rep.checksum = hex;
  return rep;
}

}  // namespace gazetrack
