// gazetrack command-line tool: synth, detect, eval, serve, bench.
//
// Exit codes: 0 success (per-frame detection failures are data), 2 usage or
// input error, 3 environment or I/O error.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "gazetrack/gazetrack.hpp"

namespace gt = gazetrack;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitEnv = 3;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

int exit_code_for(const gt::Error& e) {
  switch (e.code()) {
    case gt::ErrorCode::Io:
    case gt::ErrorCode::SourceUnavailable:
      return kExitEnv;
    default:
      return kExitInput;
  }
}

gt::PipelineConfig load_cfg(const std::string& path) {
  return path.empty() ? gt::PipelineConfig{} : gt::load_config(path);
}

std::optional<gt::CalibrationMap> load_calibration(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return gt::calibration_from_json(gt::read_json_file(path));
}

struct SynthArgs {
  std::string out;
  int count = 0;
  std::string sweep;
  double eyelid = -1;
  double noise = -1;
  std::uint64_t seed = 1;
  double radius = -1;
  int offset_x = 0, offset_y = 0;
  std::string format = "png";
  std::string config;
};

int cmd_synth(const SynthArgs& a) {
  const gt::PipelineConfig cfg = load_cfg(a.config);
  gt::SyntheticEyeSpec spec;
  if (a.eyelid >= 0) spec.eyelid_coverage = a.eyelid;
  if (a.noise >= 0) spec.noise_sigma = a.noise;
  if (a.radius > 0) {
    spec.iris_radius = a.radius;
    spec.pupil_radius = 0.4 * a.radius;
  }
  spec.seed = a.seed;
  spec.offset_x = a.offset_x;
  spec.offset_y = a.offset_y;
  gt::DatasetOptions opt{"." + a.format, cfg.screen, cfg.model, cfg.side};
  if (a.format != "png" && a.format != "pgm") throw gt::Error(gt::ErrorCode::InvalidArgument, "format must be png or pgm");
  gt::Manifest m;
  if (!a.sweep.empty()) {
    int cols = 0, rows = 0;
    char x = 0;
    std::istringstream in(a.sweep);
    if (!(in >> cols >> x >> rows) || (x != 'x' && x != 'X') || !in.eof()) {
      throw gt::Error(gt::ErrorCode::InvalidArgument, "sweep must look like 5x5");
    }
    m = gt::write_sweep_dataset(a.out, spec, cols, rows, opt);
  } else {
    m = gt::write_sample_dataset(a.out, spec, a.count > 0 ? a.count : 1, opt);
  }
  std::map<std::string, int> roles;
  for (const auto& e : m.images) ++roles[e.role];
  std::cout << "wrote " << m.images.size() << " images to " << a.out << " (";
  bool first = true;
  for (const auto& [role, n] : roles) {
    std::cout << (first ? "" : ", ") << role << ": " << n;
    first = false;
  }
  std::cout << ")\n";
  return 0;
}

struct DetectArgs {
  std::string image, overlay, calibration, config;
  bool json = false;
};

int cmd_detect(const DetectArgs& a) {
  const gt::PipelineConfig cfg = load_cfg(a.config);
  const auto cal = load_calibration(a.calibration);
  gt::GrayImage img;
  try {
    img = gt::read_image(a.image);
  } catch (const gt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  gt::FrameTrace tr;
  const gt::FrameResult r = gt::process_frame(img, cal ? &*cal : nullptr, cfg, &tr);
  if (!a.overlay.empty()) gt::write_png(a.overlay, gt::render_overlay(img, r, tr));
  if (a.json) {
    gt::json j = gt::to_json(r);
    if (!tr.failure.empty()) j["detail"] = tr.failure;
    std::cout << j.dump() << '\n';
  } else {
    std::cout << gt::to_string(r.status);
    if (r.iris) std::printf(" iris=(%.2f, %.2f, r=%.2f)", r.iris->a, r.iris->b, r.iris->r);
    if (r.corner) std::printf(" corner=(%.0f, %.0f)", r.corner->x, r.corner->y);
    if (r.screen) std::printf(" screen=(%.1f, %.1f)", r.screen->p.x, r.screen->p.y);
    if (!tr.failure.empty() && r.status != gt::FrameStatus::Ok) std::cout << " [" << tr.failure << "]";
    std::cout << '\n';
  }
  return 0;
}

struct EvalArgs {
  std::string dataset, config, out;
};

std::filesystem::path manifest_path(const std::string& p) {
  std::filesystem::path path(p);
  if (std::filesystem::is_directory(path)) path /= "manifest.json";
  return path;
}

int cmd_eval(const EvalArgs& a) {
  const gt::PipelineConfig cfg = load_cfg(a.config);
  const auto path = manifest_path(a.dataset);
  if (!std::filesystem::exists(path)) throw gt::Error(gt::ErrorCode::InvalidArgument, "no manifest at " + path.string());
  const gt::EvalReport rep = gt::evaluate_dataset(path, cfg);
  std::printf("%-12s %10s %10s %10s %10s\n", "axis", "mean_mm", "max_mm", "mean_deg", "max_deg");
  std::printf("%-12s %10.2f %10.2f %10.3f %10.3f\n", "horizontal", rep.horizontal.mean_mm, rep.horizontal.max_mm,
              rep.horizontal.mean_deg, rep.horizontal.max_deg);
  std::printf("%-12s %10.2f %10.2f %10.3f %10.3f\n", "vertical", rep.vertical.mean_mm, rep.vertical.max_mm,
              rep.vertical.mean_deg, rep.vertical.max_deg);
  std::printf("detection rate %.3f over %zu targets\n", rep.detection_rate, rep.targets);
  const gt::json j = gt::to_json(rep);
  if (!a.out.empty()) gt::write_json_file(a.out, j);
  std::cout << j.dump() << '\n';
  return 0;
}

struct ServeArgs {
  std::string source, calibration, config, log;
  int port = -1;
  bool loop = false;
  double fps = 30.0;
  int wait_clients = 0;
  double linger = 0.0;
};

int cmd_serve(const ServeArgs& a) {
  gt::PipelineConfig cfg = load_cfg(a.config);
  if (a.port >= 0) cfg.port = a.port;
  gt::CalibrationSlot slot;
  if (const auto cal = load_calibration(a.calibration)) slot.set(*cal);

  std::unique_ptr<gt::FrameSource> source;
  if (a.source == "-") {
    source = std::make_unique<gt::PnmStreamSource>(std::cin);
  } else {
    source = gt::open_replay(a.source, a.loop);
    source->fps = a.fps;
  }

  gt::SinkHub sinks;
  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw gt::Error(gt::ErrorCode::Io, "cannot open log " + a.log);
    log = &log_file;
  }
  sinks.add(std::make_shared<gt::NdjsonSink>(*log));

  gt::WsServer server(sinks, slot, cfg);
  server.start(cfg.port);
  std::cerr << "serving on ws://0.0.0.0:" << server.port() << '\n';

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  // Frames go out once enough clients are listening.
  while (a.wait_clients > 0 && !g_stop) {
    if (static_cast<int>(sinks.size()) - 2 >= a.wait_clients) break;  // minus log and calibration sinks
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  gt::StreamOptions opt;
  opt.pace = true;
  opt.stop = &g_stop;
  const gt::StreamSummary sum = gt::run_stream(*source, slot, sinks, cfg, opt);
  std::cerr << "stream ended after " << sum.frames << " frames (" << sum.dropped << " dropped)\n";
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(a.linger);
  while (!g_stop && std::chrono::steady_clock::now() < until) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  server.stop();
  return 0;
}

struct BenchArgs {
  std::string dataset, calibration, config;
  int repetitions = 1;
  int min_frames = 1000;
};

int cmd_bench(const BenchArgs& a) {
  const gt::PipelineConfig cfg = load_cfg(a.config);
  const auto cal = load_calibration(a.calibration);
  auto src = gt::open_replay(a.dataset);
  std::vector<gt::GrayImage> frames;
  while (auto img = src->next()) frames.push_back(std::move(*img));
  const gt::BenchReport rep = gt::bench(frames, cal ? &*cal : nullptr, cfg, a.repetitions,
                                        static_cast<std::size_t>(std::max(1, a.min_frames)));
  const gt::json j{{"frames", rep.frames},       {"images", frames.size()},   {"mean_us", rep.mean_us},
                   {"median_us", rep.median_us}, {"p99_us", rep.p99_us},      {"fps", rep.fps},
                   {"checksum", rep.checksum},   {"detected", rep.ok},        {"margin_vs_300hz", rep.fps / 300.0}};
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual-camera gaze tracker: synthetic data, detection, evaluation, streaming"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "render a synthetic eye dataset");
  synth->add_option("--out", sa.out, "output directory")->required();
  synth->add_option("--count", sa.count, "number of images (without --sweep)");
  synth->add_option("--sweep", sa.sweep, "gaze target grid, e.g. 5x5 (adds two calibration knots)");
  synth->add_option("--eyelid", sa.eyelid, "eyelid coverage of the iris diameter, 0..0.9");
  synth->add_option("--noise", sa.noise, "Gaussian noise sigma");
  synth->add_option("--seed", sa.seed, "base noise seed");
  synth->add_option("--radius", sa.radius, "iris radius in px");
  synth->add_option("--offset-x", sa.offset_x, "scene translation in px");
  synth->add_option("--offset-y", sa.offset_y, "scene translation in px");
  synth->add_option("--format", sa.format, "png or pgm");
  synth->add_option("--config", sa.config, "key=value config file");

  DetectArgs da;
  auto* detect = app.add_subcommand("detect", "run the pipeline on one image");
  detect->add_option("image", da.image, "input image (PNG/PGM/PPM)")->required();
  detect->add_option("--overlay", da.overlay, "write an annotated PNG");
  detect->add_flag("--json", da.json, "print the FrameResult as JSON");
  detect->add_option("--calibration", da.calibration, "calibration JSON");
  detect->add_option("--config", da.config, "key=value config file");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "calibrate on the knots of a sweep dataset and score the targets");
  eval->add_option("--dataset", ea.dataset, "dataset directory or manifest")->required();
  eval->add_option("--config", ea.config, "key=value config file");
  eval->add_option("--out", ea.out, "also write the JSON report here");

  ServeArgs va;
  auto* serve = app.add_subcommand("serve", "stream gaze results over WebSocket");
  serve->add_option("--source", va.source, "dataset directory, manifest, or - for a PGM stream on stdin")->required();
  serve->add_option("--port", va.port, "listen port (0 picks a free one)");
  serve->add_flag("--loop", va.loop, "replay the source forever");
  serve->add_option("--fps", va.fps, "replay rate, 0 for unpaced");
  serve->add_option("--calibration", va.calibration, "initial calibration JSON");
  serve->add_option("--config", va.config, "key=value config file");
  serve->add_option("--log", va.log, "NDJSON log path (default stdout)");
  serve->add_option("--wait-clients", va.wait_clients, "hold the stream until this many clients connect");
  serve->add_option("--linger", va.linger, "seconds to keep serving after the source ends");

  BenchArgs ba;
  auto* benchc = app.add_subcommand("bench", "measure pipeline throughput");
  benchc->add_option("--dataset", ba.dataset, "dataset directory or manifest")->required();
  benchc->add_option("--repetitions", ba.repetitions, "passes over the dataset");
  benchc->add_option("--min-frames", ba.min_frames, "minimum frame-processings");
  benchc->add_option("--calibration", ba.calibration, "calibration JSON");
  benchc->add_option("--config", ba.config, "key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*detect) return cmd_detect(da);
    if (*eval) return cmd_eval(ea);
    if (*serve) return cmd_serve(va);
    if (*benchc) return cmd_bench(ba);
  } catch (const gt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEnv;
  }
  return kExitInput;
}
