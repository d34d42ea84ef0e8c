#pragma once

// key = value configuration files. Blank lines and lines starting with '#'
// are ignored; unknown keys are an error.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gazetrack/error.hpp"
#include "gazetrack/pipeline.hpp"

namespace gazetrack {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw Error(ErrorCode::Parse, "bad value for " + key + ": '" + v + "'");
  return out;
}

}  // namespace detail

inline void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& v) {
  using detail::parse_number;
  if (key == "screen_width") cfg.screen.width = parse_number<int>(key, v);
  else if (key == "screen_height") cfg.screen.height = parse_number<int>(key, v);
  else if (key == "mm_per_px") cfg.screen.mm_per_px = parse_number<double>(key, v);
  else if (key == "r_ball") cfg.model.r_ball = parse_number<double>(key, v);
  else if (key == "d") cfg.model.d = parse_number<double>(key, v);
  else if (key == "r_iris_mm") cfg.model.r_iris_mm = parse_number<double>(key, v);
  else if (key == "side") cfg.side = corner_side_from_string(v);
  else if (key == "smoothing_window") cfg.smoothing_window = parse_number<int>(key, v);
  else if (key == "port") cfg.port = parse_number<int>(key, v);
  else if (key == "factor") cfg.factor = parse_number<int>(key, v);
  else if (key == "max_step") cfg.zigzag.max_step = parse_number<int>(key, v);
  else throw Error(ErrorCode::Parse, "unknown config key '" + key + "'");
}

inline void validate(const PipelineConfig& cfg) {
  const auto bad = [](const std::string& m) { throw Error(ErrorCode::InvalidArgument, m); };
  if (cfg.screen.width <= 0 || cfg.screen.height <= 0) bad("screen size must be positive");
  if (!(cfg.screen.mm_per_px > 0)) bad("mm_per_px must be positive");
  cfg.model.validate();
  if (cfg.smoothing_window < 1) bad("smoothing_window must be >= 1");
  if (cfg.port < 0 || cfg.port > 65535) bad("port out of range");
  if (cfg.factor < 1) bad("factor must be >= 1");
  if (cfg.zigzag.max_step < 1) bad("max_step must be >= 1");
}

inline PipelineConfig parse_config(std::istream& in, PipelineConfig cfg = {}) {
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Parse, "line " + std::to_string(n) + ": expected key = value");
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

inline PipelineConfig parse_config(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path.string());
  return parse_config(in);
}

}  // namespace gazetrack
