#pragma once

// Frame sources, result sinks and the streaming loop.
//
// Replay sources (image directory, manifest, in-memory frames) are finite
// and never drop. The live source reads a PGM/PPM stream on a background
// thread into a one-slot mailbox: a frame not yet picked up is replaced by
// the next one and counted as dropped.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/image_io.hpp"
#include "gazetrack/json_io.hpp"
#include "gazetrack/pipeline.hpp"

namespace gazetrack {

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Next frame, or nullopt once the source is exhausted.
  virtual std::optional<GrayImage> next() = 0;
  virtual bool live() const { return false; }
  virtual std::uint64_t dropped() const { return 0; }
  /// Replay rate in frames per second; 0 means as fast as possible.
  double fps = 0.0;
};

class VectorSource : public FrameSource {
 public:
  explicit VectorSource(std::vector<GrayImage> frames, bool loop = false) : frames_(std::move(frames)), loop_(loop) {
    if (frames_.empty()) throw Error(ErrorCode::SourceUnavailable, "no frames");
  }
  std::optional<GrayImage> next() override {
    if (i_ == frames_.size()) {
      if (!loop_) return std::nullopt;
      i_ = 0;
    }
    return frames_[i_++];
  }

 private:
  std::vector<GrayImage> frames_;
  bool loop_;
  std::size_t i_ = 0;
};

/// Replays image files in the given order, decoding lazily.
class FileListSource : public FrameSource {
 public:
  explicit FileListSource(std::vector<std::filesystem::path> files, bool loop = false)
      : files_(std::move(files)), loop_(loop) {
    if (files_.empty()) throw Error(ErrorCode::SourceUnavailable, "no images to replay");
  }
  std::optional<GrayImage> next() override {
    if (i_ == files_.size()) {
      if (!loop_) return std::nullopt;
      i_ = 0;
    }
    const auto& p = files_[i_++];
    try {
      return read_image(p);
    } catch (const Error& e) {
      throw Error(ErrorCode::SourceUnavailable, e.what());
    }
  }
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  std::vector<std::filesystem::path> files_;
  bool loop_;
  std::size_t i_ = 0;
};

inline bool is_image_file(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

/// Image files of a directory in lexicographic order.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(ErrorCode::SourceUnavailable, "not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::unique_ptr<FileListSource> directory_source(const std::filesystem::path& dir, bool loop = false) {
  return std::make_unique<FileListSource>(list_images(dir), loop);
}

inline std::unique_ptr<FileListSource> manifest_source(const std::filesystem::path& manifest_path, bool loop = false) {
  Manifest m;
  try {
    m = read_manifest(manifest_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::SourceUnavailable, e.what());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : m.images) files.push_back(manifest_path.parent_path() / e.file);
  return std::make_unique<FileListSource>(std::move(files), loop);
}

/// Opens a directory (with or without manifest.json) or a manifest file.
inline std::unique_ptr<FileListSource> open_replay(const std::filesystem::path& path, bool loop = false) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    if (std::filesystem::exists(path / "manifest.json")) return manifest_source(path / "manifest.json", loop);
    return directory_source(path, loop);
  }
  if (std::filesystem::is_regular_file(path, ec)) return manifest_source(path, loop);
  throw Error(ErrorCode::SourceUnavailable, "no such source: " + path.string());
}

/// One-slot latest-wins hand-off between a producer and a consumer.
template <typename T>
class LatestMailbox {
 public:
  void put(T v) {
    std::lock_guard lk(m_);
    if (slot_) ++dropped_;
    slot_ = std::move(v);
    cv_.notify_one();
  }
  void close() {
    std::lock_guard lk(m_);
    closed_ = true;
    cv_.notify_all();
  }
  /// Blocks until a value is available or the box is closed and empty.
  std::optional<T> take() {
    std::unique_lock lk(m_);
    cv_.wait(lk, [&] { return slot_.has_value() || closed_; });
    std::optional<T> out = std::move(slot_);
    slot_.reset();
    return out;
  }
  std::uint64_t dropped() const {
    std::lock_guard lk(m_);
    return dropped_;
  }

 private:
  mutable std::mutex m_;
  std::condition_variable cv_;
  std::optional<T> slot_;
  bool closed_ = false;
  std::uint64_t dropped_ = 0;
};

/// Live frames from a binary PGM/PPM stream (e.g. a camera piped to stdin).
/// The stream must outlive the source unless it has been read to the end.
class PnmStreamSource : public FrameSource {
 public:
  explicit PnmStreamSource(std::istream& in) : state_(std::make_shared<State>()) {
    reader_ = std::thread([st = state_, &in] {
      try {
        GrayImage img;
        while (!st->stop && read_pnm(in, img)) st->box.put(std::move(img));
      } catch (const std::exception&) {
        // A malformed stream ends the source like EOF does.
      }
      st->box.close();
      st->finished = true;
    });
  }
  ~PnmStreamSource() override {
    state_->stop = true;
    // A reader blocked on a live device cannot be interrupted; let it go.
    if (state_->finished) {
      reader_.join();
    } else {
      reader_.detach();
    }
  }
  std::optional<GrayImage> next() override { return state_->box.take(); }
  bool live() const override { return true; }
  std::uint64_t dropped() const override { return state_->box.dropped(); }

 private:
  struct State {
    LatestMailbox<GrayImage> box;
    std::atomic<bool> stop{false};
    std::atomic<bool> finished{false};
  };
  std::shared_ptr<State> state_;
  std::thread reader_;
};

struct StreamSummary {
  std::uint64_t frames = 0;
  std::uint64_t dropped = 0;
};

class Sink {
 public:
  virtual ~Sink() = default;
  virtual void on_frame(const FrameResult& r) = 0;
  virtual void on_end(const StreamSummary&) {}
};

class CallbackSink : public Sink {
 public:
  explicit CallbackSink(std::function<void(const FrameResult&)> f, std::function<void(const StreamSummary&)> end = {})
      : f_(std::move(f)), end_(std::move(end)) {}
  void on_frame(const FrameResult& r) override { f_(r); }
  void on_end(const StreamSummary& s) override {
    if (end_) end_(s);
  }

 private:
  std::function<void(const FrameResult&)> f_;
  std::function<void(const StreamSummary&)> end_;
};

/// One FrameResult JSON object per line, then an end marker line.
class NdjsonSink : public Sink {
 public:
  explicit NdjsonSink(std::ostream& out) : out_(out) {}
  void on_frame(const FrameResult& r) override { out_ << to_json(r).dump() << '\n'; }
  void on_end(const StreamSummary& s) override {
    out_ << end_message(s.frames, s.dropped).dump() << '\n';
    out_.flush();
  }

 private:
  std::ostream& out_;
};

/// Fan-out to a changing set of sinks. A sink added while the stream runs
/// sees only frames published after it was added.
class SinkHub {
 public:
  using Id = std::uint64_t;
  Id add(std::shared_ptr<Sink> s) {
    std::lock_guard lk(m_);
    sinks_.emplace_back(++next_, std::move(s));
    return next_;
  }
  void remove(Id id) {
    std::lock_guard lk(m_);
    std::erase_if(sinks_, [id](const auto& p) { return p.first == id; });
  }
  std::size_t size() const {
    std::lock_guard lk(m_);
    return sinks_.size();
  }
  void publish(const FrameResult& r) {
    for (auto& s : snapshot()) s->on_frame(r);
  }
  void end(const StreamSummary& sum) {
    for (auto& s : snapshot()) s->on_end(sum);
  }

 private:
  std::vector<std::shared_ptr<Sink>> snapshot() const {
    std::lock_guard lk(m_);
    std::vector<std::shared_ptr<Sink>> out;
    for (const auto& p : sinks_) out.push_back(p.second);
    return out;
  }
  mutable std::mutex m_;
  std::vector<std::pair<Id, std::shared_ptr<Sink>>> sinks_;
  Id next_ = 0;
};

/// Current calibration, swapped atomically as a whole.
class CalibrationSlot {
 public:
  std::shared_ptr<const CalibrationMap> get() const {
    std::lock_guard lk(m_);
    return cal_;
  }
  void set(const CalibrationMap& c) {
    auto p = std::make_shared<const CalibrationMap>(c);
    std::lock_guard lk(m_);
    cal_ = std::move(p);
  }
  void clear() {
    std::lock_guard lk(m_);
    cal_.reset();
  }
  bool calibrated() const { return get() != nullptr; }

 private:
  mutable std::mutex m_;
  std::shared_ptr<const CalibrationMap> cal_;
};

/// Moving average of the screen point over the last `window` Ok frames.
class GazeSmoother {
 public:
  explicit GazeSmoother(int window) : window_(std::max(1, window)) {}
  void apply(FrameResult& r) {
    if (window_ == 1 || r.status != FrameStatus::Ok || !r.screen) return;
    hist_.push_back(r.screen->p);
    if (static_cast<int>(hist_.size()) > window_) hist_.pop_front();
    Vec2 s;
    for (const auto& p : hist_) s = s + p;
    r.screen->p = s * (1.0 / static_cast<double>(hist_.size()));
  }
  void reset() { hist_.clear(); }

 private:
  int window_;
  std::deque<Vec2> hist_;
};

struct StreamOptions {
  bool pace = false;  // honor source fps on replay
  const std::atomic<bool>* stop = nullptr;
};

/// Pulls frames until the source is exhausted (or `stop` is set), processes
/// each and publishes the result to every sink, then publishes the end
/// marker.
inline StreamSummary run_stream(FrameSource& source, const CalibrationSlot& cal, SinkHub& sinks,
                                const PipelineConfig& cfg, const StreamOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  GazeSmoother smoother(cfg.smoothing_window);
  StreamSummary sum;
  while (!(opt.stop && opt.stop->load())) {
    std::optional<GrayImage> img = source.next();
    if (!img) break;
    const auto cal_now = cal.get();
    FrameResult r = process_frame(*img, cal_now.get(), cfg);
    r.frame_id = sum.frames++;
    r.t_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    smoother.apply(r);
    sinks.publish(r);
    if (opt.pace && source.fps > 0 && !source.live()) {
      std::this_thread::sleep_until(t0 + std::chrono::duration_cast<clock::duration>(
                                             std::chrono::duration<double>(static_cast<double>(sum.frames) / source.fps)));
    }
  }
  sum.dropped = source.dropped();
  sinks.end(sum);
  return sum;
}

/// Two-cross calibration from consecutive frames: `dwell` frames while the
/// first cross is shown, then `dwell` frames for the second.
inline CalibrationMap run_calibration_sequence(FrameSource& source, const ScreenGeometry& screen, const Vec2& cross_a,
                                               const Vec2& cross_b, const PipelineConfig& cfg,
                                               int dwell = kCalibrationDwell) {
  for (const Vec2& c : {cross_a, cross_b}) {
    if (c.x < 0 || c.y < 0 || c.x >= screen.width || c.y >= screen.height) {
      throw Error(ErrorCode::CalibrationFailed, "calibration cross off screen");
    }
  }
  CalibrationWindow wa{cross_a, {}, {}, 0}, wb{cross_b, {}, {}, 0};
  for (CalibrationWindow* w : {&wa, &wb}) {
    for (int i = 0; i < dwell; ++i) {
      auto img = source.next();
      if (!img) throw Error(ErrorCode::CalibrationFailed, "source ended during calibration");
      w->add(process_frame(*img, nullptr, cfg));
    }
  }
  return calibrate_from_windows(wa, wb, cfg.model);
}

/// Calibration driven by a running stream: attached as a sink, it gathers
/// the next `dwell` results for each cross in turn, then installs the new
/// map in the slot and reports the outcome.
class CalibrationCollector : public Sink {
 public:
  using Done = std::function<void(const std::optional<CalibrationMap>&, const std::string& error)>;

  CalibrationCollector(CalibrationSlot& slot, const EyeballModel& model, Done done)
      : slot_(slot), model_(model), done_(std::move(done)) {}

  void start(const Vec2& a, const Vec2& b, int dwell = kCalibrationDwell) {
    std::lock_guard lk(m_);
    a_ = CalibrationWindow{a, {}, {}, 0};
    b_ = CalibrationWindow{b, {}, {}, 0};
    dwell_ = dwell;
    active_ = true;
  }
  bool active() const {
    std::lock_guard lk(m_);
    return active_;
  }

  void on_frame(const FrameResult& r) override {
    std::optional<CalibrationMap> result;
    std::string error;
    {
      std::lock_guard lk(m_);
      if (!active_) return;
      CalibrationWindow& w = a_.frames < dwell_ ? a_ : b_;
      w.add(r);
      if (b_.frames < dwell_) return;
      active_ = false;
      try {
        result = calibrate_from_windows(a_, b_, model_);
      } catch (const Error& e) {
        error = e.what();
      }
    }
    if (result) slot_.set(*result);
    if (done_) done_(result, error);
  }

  void on_end(const StreamSummary&) override {
    bool was_active = false;
    {
      std::lock_guard lk(m_);
      was_active = active_;
      active_ = false;
    }
    if (was_active && done_) done_(std::nullopt, "stream ended during calibration");
  }

 private:
  mutable std::mutex m_;
  CalibrationSlot& slot_;
  EyeballModel model_;
  Done done_;
  CalibrationWindow a_, b_;
  int dwell_ = kCalibrationDwell;
  bool active_ = false;
};

}  // namespace gazetrack
