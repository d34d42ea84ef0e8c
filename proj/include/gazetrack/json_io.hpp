#pragma once

// JSON forms of results, calibrations, dataset manifests and stream
// control messages (nlohmann::json).

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/gaze.hpp"
#include "gazetrack/pipeline.hpp"

namespace gazetrack {

using json = nlohmann::json;

inline json to_json(const FrameResult& r) {
  json j;
  j["frame_id"] = r.frame_id;
  j["t_ms"] = r.t_ms;
  j["status"] = to_string(r.status);
  j["iris"] = r.iris ? json{{"cx", r.iris->a}, {"cy", r.iris->b}, {"r", r.iris->r}} : json(nullptr);
  j["corner"] = r.corner ? json{{"x", r.corner->x}, {"y", r.corner->y}} : json(nullptr);
  j["delta"] = r.delta ? json{{"dx", r.delta->x}, {"dy", r.delta->y}} : json(nullptr);
  j["screen"] = r.screen ? json{{"x", r.screen->p.x}, {"y", r.screen->p.y}, {"off_screen", r.screen->off_screen}}
                         : json(nullptr);
  j["inliers"] = r.inlier_count;
  j["proc_us"] = r.proc_us;
  return j;
}

inline FrameResult frame_result_from_json(const json& j) {
  try {
    FrameResult r;
    r.frame_id = j.at("frame_id").get<std::uint64_t>();
    r.t_ms = j.at("t_ms").get<double>();
    r.status = frame_status_from_string(j.at("status").get<std::string>());
    if (!j.at("iris").is_null()) {
      const auto& i = j["iris"];
      r.iris = Circle{i.at("cx").get<double>(), i.at("cy").get<double>(), i.at("r").get<double>()};
    }
    if (!j.at("corner").is_null()) {
      r.corner = CornerPoint{j["corner"].at("x").get<double>(), j["corner"].at("y").get<double>()};
    }
    if (!j.at("delta").is_null()) r.delta = Vec2{j["delta"].at("dx").get<double>(), j["delta"].at("dy").get<double>()};
    if (!j.at("screen").is_null()) {
      const auto& s = j["screen"];
      r.screen = ScreenPoint{{s.at("x").get<double>(), s.at("y").get<double>()}, s.value("off_screen", false)};
    }
    r.inlier_count = j.at("inliers").get<int>();
    r.proc_us = j.at("proc_us").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad frame result: ") + e.what());
  }
}

inline json to_json(const EyeballModel& m) { return {{"r_ball", m.r_ball}, {"d", m.d}, {"r_iris_mm", m.r_iris_mm}}; }

inline json to_json(const CalibrationMap& c) {
  return {{"reference_vector", {{"x", c.reference_vector.x}, {"y", c.reference_vector.y}}},
          {"px_to_mm", c.px_to_mm},
          {"alpha", {{"x", c.x.alpha}, {"y", c.y.alpha}}},
          {"beta", {{"x", c.x.beta}, {"y", c.y.beta}}},
          {"model", to_json(c.model)}};
}

inline CalibrationMap calibration_from_json(const json& j) {
  try {
    CalibrationMap c;
    c.reference_vector = {j.at("reference_vector").at("x").get<double>(), j.at("reference_vector").at("y").get<double>()};
    c.px_to_mm = j.at("px_to_mm").get<double>();
    c.x = {j.at("alpha").at("x").get<double>(), j.at("beta").at("x").get<double>()};
    c.y = {j.at("alpha").at("y").get<double>(), j.at("beta").at("y").get<double>()};
    const auto& m = j.at("model");
    c.model = {m.at("r_ball").get<double>(), m.at("d").get<double>(), m.at("r_iris_mm").get<double>()};
    c.model.validate();
    if (!(c.px_to_mm > 0)) throw Error(ErrorCode::Parse, "px_to_mm must be positive");
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad calibration: ") + e.what());
  }
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

// Dataset manifest.

struct ManifestEntry {
  std::string file;
  std::string role;  // knot_a, knot_b, target, sample, failure
  Circle iris;
  Vec2 corner;
  std::optional<Vec2> target_screen;
  std::string spec_hash;
  double eyelid_coverage = 0.0;
};

struct Manifest {
  ScreenGeometry screen;
  EyeballModel model;
  CornerSide side = CornerSide::Temporal;
  std::vector<ManifestEntry> images;

  const ManifestEntry* find_role(const std::string& role) const {
    for (const auto& e : images) {
      if (e.role == role) return &e;
    }
    return nullptr;
  }
};

inline json to_json(const ManifestEntry& e) {
  json j{{"file", e.file},
         {"role", e.role},
         {"iris", {{"cx", e.iris.a}, {"cy", e.iris.b}, {"r", e.iris.r}}},
         {"corner", {{"x", e.corner.x}, {"y", e.corner.y}}},
         {"spec_hash", e.spec_hash},
         {"eyelid_coverage", e.eyelid_coverage}};
  j["target_screen"] = e.target_screen ? json{{"x", e.target_screen->x}, {"y", e.target_screen->y}} : json(nullptr);
  return j;
}

inline json to_json(const Manifest& m) {
  json imgs = json::array();
  for (const auto& e : m.images) imgs.push_back(to_json(e));
  return {{"screen", {{"w", m.screen.width}, {"h", m.screen.height}, {"mm_per_px", m.screen.mm_per_px}}},
          {"model", to_json(m.model)},
          {"side", to_string(m.side)},
          {"images", imgs}};
}

inline Manifest manifest_from_json(const json& j) {
  try {
    Manifest m;
    if (j.contains("screen")) {
      const auto& s = j["screen"];
      m.screen = {s.at("w").get<int>(), s.at("h").get<int>(), s.at("mm_per_px").get<double>()};
    }
    if (j.contains("model")) {
      const auto& md = j["model"];
      m.model = {md.at("r_ball").get<double>(), md.at("d").get<double>(), md.at("r_iris_mm").get<double>()};
    }
    if (j.contains("side")) m.side = corner_side_from_string(j["side"].get<std::string>());
    for (const auto& e : j.at("images")) {
      ManifestEntry me;
      me.file = e.at("file").get<std::string>();
      me.role = e.value("role", "sample");
      me.iris = {e.at("iris").at("cx").get<double>(), e.at("iris").at("cy").get<double>(), e.at("iris").at("r").get<double>()};
      me.corner = {e.at("corner").at("x").get<double>(), e.at("corner").at("y").get<double>()};
      if (e.contains("target_screen") && !e["target_screen"].is_null()) {
        me.target_screen = Vec2{e["target_screen"].at("x").get<double>(), e["target_screen"].at("y").get<double>()};
      }
      me.spec_hash = e.value("spec_hash", "");
      me.eyelid_coverage = e.value("eyelid_coverage", 0.0);
      m.images.push_back(std::move(me));
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad manifest: ") + e.what());
  }
}

inline Manifest read_manifest(const std::filesystem::path& path) { return manifest_from_json(read_json_file(path)); }

// Stream control messages.

inline json hello_message(const ScreenGeometry& s, bool calibrated) {
  return {{"type", "hello"}, {"screen", {{"w", s.width}, {"h", s.height}}}, {"calibrated", calibrated}};
}

inline json end_message(std::uint64_t frames, std::uint64_t dropped) {
  return {{"type", "end"}, {"frames", frames}, {"dropped", dropped}};
}

}  // namespace gazetrack
