#pragma once

// Synthetic datasets on disk: images plus manifest.json.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "gazetrack/image_io.hpp"
#include "gazetrack/json_io.hpp"
#include "gazetrack/synth.hpp"

namespace gazetrack {

struct DatasetOptions {
  std::string extension = ".png";
  ScreenGeometry screen;
  EyeballModel model;
  CornerSide side = CornerSide::Temporal;
};

namespace detail {

inline ManifestEntry manifest_entry(const std::string& file, const std::string& role, const SyntheticEye& eye,
                                    const SyntheticEyeSpec& spec, CornerSide side) {
  ManifestEntry e;
  e.file = file;
  e.role = role;
  e.iris = eye.truth.iris;
  e.corner = eye.truth.corner(side);
  e.spec_hash = spec_hash(spec);
  e.eyelid_coverage = spec.eyelid_coverage;
  return e;
}

inline std::string numbered(const std::string& stem, std::size_t i, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu", stem.c_str(), i);
  return buf + ext;
}

inline void prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create " + dir.string());
}

}  // namespace detail

/// `count` renders of `base` with consecutive seeds. Frames with eyelid
/// coverage >= 0.6 are flagged as failure cases.
inline Manifest write_sample_dataset(const std::filesystem::path& dir, const SyntheticEyeSpec& base, int count,
                                     const DatasetOptions& opt = {}) {
  base.validate();
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be positive");
  detail::prepare_dir(dir);
  Manifest m{opt.screen, opt.model, opt.side, {}};
  const std::string role = base.eyelid_coverage >= 0.6 ? "failure" : "sample";
  for (int i = 0; i < count; ++i) {
    SyntheticEyeSpec s = base;
    s.seed = base.seed + static_cast<std::uint64_t>(i);
    const SyntheticEye eye = render(s);
    const std::string file = detail::numbered(role, static_cast<std::size_t>(i), opt.extension);
    write_image(dir / file, eye.image);
    m.images.push_back(detail::manifest_entry(file, role, eye, s, opt.side));
  }
  write_json_file(dir / "manifest.json", to_json(m));
  return m;
}

/// Two calibration knots (the crosses at bottom-left and top-right) and a
/// cols x rows grid of gaze targets. `base` looks at the screen center.
inline Manifest write_sweep_dataset(const std::filesystem::path& dir, const SyntheticEyeSpec& base, int cols, int rows,
                                    const DatasetOptions& opt = {}) {
  base.validate();
  if (cols < 1 || rows < 1) throw Error(ErrorCode::InvalidArgument, "sweep needs at least 1x1 targets");
  const auto [a, b] = calibration_crosses(opt.screen);
  const Vec2 reference = (a + b) * 0.5;
  std::vector<Vec2> targets{a, b};
  for (const Vec2& t : target_grid(cols, rows, opt.screen)) targets.push_back(t);
  // Validate every target before touching the disk.
  const auto items = gaze_sweep_specs(base, opt.model, targets, opt.screen, reference);
  detail::prepare_dir(dir);
  Manifest m{opt.screen, opt.model, opt.side, {}};
  for (std::size_t i = 0; i < items.size(); ++i) {
    const SyntheticEye eye = render(items[i].spec);
    const std::string role = i == 0 ? "knot_a" : i == 1 ? "knot_b" : "target";
    const std::string file = i < 2 ? role + opt.extension : detail::numbered("target", i - 2, opt.extension);
    write_image(dir / file, eye.image);
    ManifestEntry e = detail::manifest_entry(file, role, eye, items[i].spec, opt.side);
    e.target_screen = items[i].target;
    m.images.push_back(std::move(e));
  }
  write_json_file(dir / "manifest.json", to_json(m));
  return m;
}

}  // namespace gazetrack
