#pragma once

// Eyeball-model gaze estimation and two-point screen calibration.
//
// Per axis the eye is a sphere of radius r_ball at distance d from the
// screen. Rotating by theta moves the projected iris center by
// r_ball sin(theta) and the gaze point on the screen by d tan(theta).
// Displacements are measured from the eye corner, so rigid head translation
// cancels out.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "gazetrack/corner.hpp"
#include "gazetrack/error.hpp"
#include "gazetrack/iris.hpp"

namespace gazetrack {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }

struct EyeballModel {
  double r_ball = 12.5;    // mm
  double d = 650.0;        // eyeball surface to screen, mm
  double r_iris_mm = 5.9;  // physical iris radius, mm

  void validate() const {
    if (!(r_ball >= 12.0 && r_ball <= 13.0)) throw Error(ErrorCode::InvalidArgument, "r_ball must lie in [12, 13] mm");
    if (!(d > 0)) throw Error(ErrorCode::InvalidArgument, "d must be positive");
    if (!(r_iris_mm > 0)) throw Error(ErrorCode::InvalidArgument, "r_iris_mm must be positive");
  }
};

struct AxisMap {
  double alpha = 1.0;  // screen px per mm
  double beta = 0.0;   // screen px
};

struct CalibrationMap {
  Vec2 reference_vector;  // corner -> iris at the reference gaze, px
  double px_to_mm = 0.0;
  AxisMap x;
  AxisMap y;
  EyeballModel model;
};

struct ScreenGeometry {
  int width = 1920;         // px
  int height = 1080;        // px
  double mm_per_px = 0.25;  // physical pixel pitch
};

/// Corner -> iris-center vector in image pixels.
inline Vec2 corner_to_iris(const Circle& iris, const CornerPoint& corner) {
  return {iris.a - corner.x, iris.b - corner.y};
}

/// Iris displacement from the reference gaze in millimeters. Image y grows
/// downward, so the y component is negated: looking up gives positive dy.
inline Vec2 displacement(const Vec2& corner_to_iris_px, const CalibrationMap* cal) {
  if (!cal || !(cal->px_to_mm > 0)) throw Error(ErrorCode::NotCalibrated, "displacement needs a calibration");
  const Vec2 d = corner_to_iris_px - cal->reference_vector;
  return {d.x * cal->px_to_mm, -d.y * cal->px_to_mm};
}

inline Vec2 displacement(const Circle& iris, const CornerPoint& corner, const CalibrationMap* cal) {
  return displacement(corner_to_iris(iris, corner), cal);
}

struct GazeEstimate {
  Vec2 g;  // mm on the screen plane, relative to the reference gaze
  bool clamped = false;
};

inline double gaze_axis(double delta, const EyeballModel& m, bool& clamped) {
  double s = delta / m.r_ball;
  if (s >= 1.0 || s <= -1.0) {
    clamped = true;
    s = std::clamp(s, -1.0, 1.0);
  }
  return m.d * std::tan(std::asin(s));
}

/// Per-axis theta = asin(delta / r_ball), g = d tan(theta). |delta| >= r_ball
/// is clamped (theta = +-90 deg, g unbounded) and flagged.
inline GazeEstimate gaze_from_delta(const Vec2& delta, const EyeballModel& model) {
  GazeEstimate out;
  out.g.x = gaze_axis(delta.x, model, out.clamped);
  out.g.y = gaze_axis(delta.y, model, out.clamped);
  return out;
}

/// Inverse of gaze_from_delta for one axis.
inline double delta_from_gaze(double g, const EyeballModel& model) {
  return model.r_ball * std::sin(std::atan(g / model.d));
}

/// Fits screen = alpha * g + beta through two knots.
inline AxisMap fit_axis(double g1, double s1, double g2, double s2) {
  if (s1 == s2 || g1 == g2) throw Error(ErrorCode::DegenerateCalibration, "calibration knots coincide on an axis");
  AxisMap m;
  m.alpha = (s2 - s1) / (g2 - g1);
  m.beta = s1 - m.alpha * g1;
  if (!std::isfinite(m.alpha) || !std::isfinite(m.beta) || m.alpha == 0) {
    throw Error(ErrorCode::DegenerateCalibration, "non-invertible axis map");
  }
  return m;
}

struct CalibrationReading {
  Vec2 corner_to_iris;  // px
  Vec2 cross;           // screen px
};

/// Two-cross calibration. The iris radius anchors the pixel scale, the
/// midpoint of the two readings becomes the reference gaze, and each axis
/// gets a linear map through the two (g, cross) knots.
inline CalibrationMap calibrate(const CalibrationReading& a, const CalibrationReading& b, const EyeballModel& model,
                                double iris_radius_px) {
  model.validate();
  if (!(iris_radius_px > 0)) throw Error(ErrorCode::DegenerateCalibration, "iris radius must be positive");
  if (a.cross.x == b.cross.x || a.cross.y == b.cross.y) {
    throw Error(ErrorCode::DegenerateCalibration, "calibration crosses coincide on an axis");
  }
  CalibrationMap cal;
  cal.model = model;
  cal.px_to_mm = model.r_iris_mm / iris_radius_px;
  cal.reference_vector = (a.corner_to_iris + b.corner_to_iris) * 0.5;
  const GazeEstimate ga = gaze_from_delta(displacement(a.corner_to_iris, &cal), model);
  const GazeEstimate gb = gaze_from_delta(displacement(b.corner_to_iris, &cal), model);
  cal.x = fit_axis(ga.g.x, a.cross.x, gb.g.x, b.cross.x);
  cal.y = fit_axis(ga.g.y, a.cross.y, gb.g.y, b.cross.y);
  return cal;
}

struct ScreenPoint {
  Vec2 p;
  bool off_screen = false;
};

inline ScreenPoint to_screen(const Vec2& g, const CalibrationMap* cal, int screen_width, int screen_height) {
  if (!cal || !(cal->px_to_mm > 0)) throw Error(ErrorCode::NotCalibrated, "to_screen needs a calibration");
  ScreenPoint s;
  s.p = {cal->x.alpha * g.x + cal->x.beta, cal->y.alpha * g.y + cal->y.beta};
  s.off_screen = !(s.p.x >= 0 && s.p.x < screen_width && s.p.y >= 0 && s.p.y < screen_height);
  return s;
}

/// View angle (degrees) subtended by an on-screen error at distance d.
inline double angular_error(double error_mm, double d) {
  if (!(d > 0)) throw Error(ErrorCode::InvalidArgument, "d must be positive");
  return std::atan(error_mm / d) * 180.0 / std::numbers::pi;
}

}  // namespace gazetrack
