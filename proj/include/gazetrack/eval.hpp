#pragma once

// Dataset evaluation: calibrate on the two knot images, run every target
// image and compare screen gaze with the manifest targets.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/image_io.hpp"
#include "gazetrack/json_io.hpp"
#include "gazetrack/pipeline.hpp"

namespace gazetrack {

struct EvalRecord {
  std::string file;
  FrameStatus status = FrameStatus::NoEye;
  Vec2 target;
  std::optional<Vec2> screen;
  std::optional<Vec2> error_mm;   // |screen - target| per axis
  std::optional<Vec2> error_deg;
  std::optional<double> iris_error_px;  // center distance to the manifest iris
};

struct AxisStats {
  double mean_mm = 0, max_mm = 0, mean_deg = 0, max_deg = 0;
};

struct EvalReport {
  AxisStats horizontal, vertical;
  double detection_rate = 0.0;
  std::size_t targets = 0;
  std::map<std::string, int> status_counts;
  std::vector<EvalRecord> records;
  CalibrationMap calibration;
  double d = 0.0;
};

/// Calibration from one frame per knot.
inline CalibrationMap calibrate_from_knots(const GrayImage& knot_a, const Vec2& cross_a, const GrayImage& knot_b,
                                           const Vec2& cross_b, const PipelineConfig& cfg) {
  CalibrationWindow wa{cross_a, {}, {}, 0}, wb{cross_b, {}, {}, 0};
  wa.add(process_frame(knot_a, nullptr, cfg));
  wb.add(process_frame(knot_b, nullptr, cfg));
  return calibrate_from_windows(wa, wb, cfg.model, 1);
}

inline void finalize(EvalReport& rep) {
  std::size_t n = 0, ok = 0;
  for (const auto& r : rep.records) {
    ++rep.status_counts[to_string(r.status)];
    if (r.status == FrameStatus::Ok) ++ok;
    if (!r.error_mm) continue;
    ++n;
    rep.horizontal.mean_mm += r.error_mm->x;
    rep.vertical.mean_mm += r.error_mm->y;
    rep.horizontal.max_mm = std::max(rep.horizontal.max_mm, r.error_mm->x);
    rep.vertical.max_mm = std::max(rep.vertical.max_mm, r.error_mm->y);
  }
  if (n) {
    rep.horizontal.mean_mm /= static_cast<double>(n);
    rep.vertical.mean_mm /= static_cast<double>(n);
  }
  for (AxisStats* a : {&rep.horizontal, &rep.vertical}) {
    a->mean_deg = angular_error(a->mean_mm, rep.d);
    a->max_deg = angular_error(a->max_mm, rep.d);
  }
  rep.targets = rep.records.size();
  rep.detection_rate = rep.records.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(rep.records.size());
}

inline EvalRecord evaluate_frame(const GrayImage& img, const std::string& file, const Vec2& target,
                                 const std::optional<Circle>& truth, const CalibrationMap& cal,
                                 const PipelineConfig& cfg) {
  EvalRecord rec;
  rec.file = file;
  rec.target = target;
  const FrameResult r = process_frame(img, &cal, cfg);
  rec.status = r.status;
  if (r.iris && truth) rec.iris_error_px = std::hypot(r.iris->a - truth->a, r.iris->b - truth->b);
  if (r.status == FrameStatus::Ok && r.screen) {
    rec.screen = r.screen->p;
    rec.error_mm = Vec2{std::abs(r.screen->p.x - target.x) * cfg.screen.mm_per_px,
                        std::abs(r.screen->p.y - target.y) * cfg.screen.mm_per_px};
    rec.error_deg = Vec2{angular_error(rec.error_mm->x, cfg.model.d), angular_error(rec.error_mm->y, cfg.model.d)};
  }
  return rec;
}

/// Evaluates a manifest dataset. The manifest's screen, model and side
/// override `cfg`.
inline EvalReport evaluate_dataset(const std::filesystem::path& manifest_path, PipelineConfig cfg) {
  const Manifest m = read_manifest(manifest_path);
  cfg.screen = m.screen;
  cfg.model = m.model;
  cfg.side = m.side;
  const auto dir = manifest_path.parent_path();
  const ManifestEntry* ka = m.find_role("knot_a");
  const ManifestEntry* kb = m.find_role("knot_b");
  if (!ka || !kb || !ka->target_screen || !kb->target_screen) {
    throw Error(ErrorCode::InvalidArgument, "manifest lacks knot_a/knot_b images with targets");
  }
  EvalReport rep;
  rep.d = cfg.model.d;
  rep.calibration = calibrate_from_knots(read_image(dir / ka->file), *ka->target_screen, read_image(dir / kb->file),
                                         *kb->target_screen, cfg);
  for (const auto& e : m.images) {
    if (e.role != "target" || !e.target_screen) continue;
    rep.records.push_back(evaluate_frame(read_image(dir / e.file), e.file, *e.target_screen, e.iris, rep.calibration, cfg));
  }
  if (rep.records.empty()) throw Error(ErrorCode::InvalidArgument, "manifest has no target images");
  finalize(rep);
  return rep;
}

inline json to_json(const EvalReport& rep) {
  const auto axis = [](const AxisStats& a) {
    return json{{"mean_mm", a.mean_mm}, {"max_mm", a.max_mm}, {"mean_deg", a.mean_deg}, {"max_deg", a.max_deg}};
  };
  json recs = json::array();
  for (const auto& r : rep.records) {
    json j{{"file", r.file}, {"status", to_string(r.status)}, {"target", {{"x", r.target.x}, {"y", r.target.y}}}};
    j["screen"] = r.screen ? json{{"x", r.screen->x}, {"y", r.screen->y}} : json(nullptr);
    j["error_mm"] = r.error_mm ? json{{"x", r.error_mm->x}, {"y", r.error_mm->y}} : json(nullptr);
    j["error_deg"] = r.error_deg ? json{{"x", r.error_deg->x}, {"y", r.error_deg->y}} : json(nullptr);
    j["iris_error_px"] = r.iris_error_px ? json(*r.iris_error_px) : json(nullptr);
    recs.push_back(std::move(j));
  }
  return {{"horizontal", axis(rep.horizontal)},
          {"vertical", axis(rep.vertical)},
          {"detection_rate", rep.detection_rate},
          {"targets", rep.targets},
          {"status_counts", rep.status_counts},
          {"d_mm", rep.d},
          {"calibration", to_json(rep.calibration)},
          {"records", recs}};
}

}  // namespace gazetrack
