#pragma once

// WebSocket broadcaster for the gaze stream (Boost.Beast).
//
// Server -> client text messages:
//   {"type":"hello","screen":{"w","h"},"calibrated":bool}   on connect
//   FrameResult objects (no "type" key)                      per frame
//   {"type":"calibration","ok":bool,...}                     after a calibrate command
//   {"type":"recalibrated"}                                  after a recalibrate command
//   {"type":"end","frames","dropped"}                        when the source ends
//   {"type":"error","message"}                               on a bad command
// Client -> server:
//   {"cmd":"calibrate","crosses":[{"x","y"},{"x","y"}]}  calibrate on the next frames
//   {"cmd":"recalibrate"}                                 drop the current calibration

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "gazetrack/error.hpp"
#include "gazetrack/json_io.hpp"
#include "gazetrack/stream.hpp"

namespace gazetrack {

namespace ws_detail {

namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class Session;

/// Shared state of all sessions.
struct Hub {
  SinkHub& sinks;
  CalibrationSlot& slot;
  ScreenGeometry screen;
  int dwell;
  std::shared_ptr<CalibrationCollector> collector;
  std::mutex m;
  std::vector<std::weak_ptr<Session>> sessions;

  void broadcast(const std::string& text);
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    ws_.set_option(beast::websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
  }

  /// Thread-safe: queues a text message for this client.
  void send(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), t = std::move(text)]() mutable {
      if (self->closed_) return;
      self->queue_.push_back(std::move(t));
      if (self->queue_.size() == 1) self->write_next();
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closed_) return;
      self->closed_ = true;
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  class FrameSink : public Sink {
   public:
    explicit FrameSink(std::weak_ptr<Session> s) : s_(std::move(s)) {}
    void on_frame(const FrameResult& r) override {
      if (auto s = s_.lock()) s->send(to_json(r).dump());
    }
    void on_end(const StreamSummary& sum) override {
      if (auto s = s_.lock()) s->send(end_message(sum.frames, sum.dropped).dump());
    }

   private:
    std::weak_ptr<Session> s_;
  };

  void on_accept(beast::error_code ec) {
    if (ec) return;
    ws_.text(true);
    send(hello_message(hub_.screen, hub_.slot.calibrated()).dump());
    // Registered after the hello is queued so frames always follow it.
    sink_id_ = hub_.sinks.add(std::make_shared<FrameSink>(weak_from_this()));
    {
      std::lock_guard lk(hub_.m);
      hub_.sessions.push_back(weak_from_this());
    }
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle_command(text);
    read_next();
  }

  void handle_command(const std::string& text) {
    const auto err = [&](const std::string& m) { send(json{{"type", "error"}, {"message", m}}.dump()); };
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception&) {
      err("message is not JSON");
      return;
    }
    const std::string cmd = j.is_object() ? j.value("cmd", "") : "";
    if (cmd == "recalibrate") {
      hub_.slot.clear();
      hub_.broadcast(json{{"type", "recalibrated"}}.dump());
    } else if (cmd == "calibrate") {
      try {
        const auto& c = j.at("crosses");
        if (!c.is_array() || c.size() != 2) throw Error(ErrorCode::Parse, "crosses must hold two points");
        const Vec2 a{c[0].at("x").get<double>(), c[0].at("y").get<double>()};
        const Vec2 b{c[1].at("x").get<double>(), c[1].at("y").get<double>()};
        hub_.collector->start(a, b, hub_.dwell);
      } catch (const std::exception& e) {
        err(std::string("bad calibrate command: ") + e.what());
      }
    } else {
      err("unknown command");
    }
  }

  void write_next() {
    ws_.async_write(net::buffer(queue_.front()), beast::bind_front_handler(&Session::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) write_next();
  }

  void finish() {
    if (sink_id_) hub_.sinks.remove(*sink_id_);
    sink_id_.reset();
    queue_.clear();
    closed_ = true;
  }

  beast::websocket::stream<beast::tcp_stream> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::optional<SinkHub::Id> sink_id_;
  bool closed_ = false;
};

inline void Hub::broadcast(const std::string& text) {
  std::vector<std::shared_ptr<Session>> live;
  {
    std::lock_guard lk(m);
    std::erase_if(sessions, [](const auto& w) { return w.expired(); });
    for (auto& w : sessions) {
      if (auto s = w.lock()) live.push_back(std::move(s));
    }
  }
  for (auto& s : live) s->send(text);
}

}  // namespace ws_detail

/// Serves the gaze stream on a port. Frames published to `sinks` reach every
/// connected client; calibration commands feed `slot`.
class WsServer {
 public:
  WsServer(SinkHub& sinks, CalibrationSlot& slot, const PipelineConfig& cfg, int dwell = kCalibrationDwell)
      : hub_{sinks, slot, cfg.screen, dwell, nullptr, {}, {}}, acceptor_(ioc_) {
    hub_.collector = std::make_shared<CalibrationCollector>(
        slot, cfg.model, [this](const std::optional<CalibrationMap>& cal, const std::string& error) {
          json msg{{"type", "calibration"}, {"ok", cal.has_value()}};
          if (cal) {
            msg["calibration"] = to_json(*cal);
          } else {
            msg["error"] = error;
          }
          hub_.broadcast(msg.dump());
        });
    collector_id_ = sinks.add(hub_.collector);
  }

  ~WsServer() { stop(); }

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port; see port().
  void start(int port, const std::string& address = "0.0.0.0") {
    namespace net = boost::asio;
    using tcp = net::ip::tcp;
    boost::system::error_code ec;
    const tcp::endpoint ep(net::ip::make_address(address, ec), static_cast<unsigned short>(port));
    if (ec) throw Error(ErrorCode::Io, "bad listen address " + address);
    acceptor_.open(ep.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(ep, ec);
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot listen on port " + std::to_string(port) + ": " + ec.message());
    port_ = acceptor_.local_endpoint().port();
    accept_next();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  void stop() {
    if (!thread_.joinable()) return;
    // Let queued messages (e.g. the end marker) go out before closing.
    boost::asio::post(ioc_, [this] {
      boost::system::error_code ec;
      acceptor_.close(ec);
    });
    std::vector<std::shared_ptr<ws_detail::Session>> live;
    {
      std::lock_guard lk(hub_.m);
      for (auto& w : hub_.sessions) {
        if (auto s = w.lock()) live.push_back(std::move(s));
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    for (auto& s : live) s->close();
    live.clear();
    ioc_.stop();
    thread_.join();
    hub_.sinks.remove(collector_id_);
  }

  int port() const { return port_; }
  CalibrationCollector& collector() { return *hub_.collector; }

 private:
  void accept_next() {
    acceptor_.async_accept(boost::asio::make_strand(ioc_), [this](boost::system::error_code ec, boost::asio::ip::tcp::socket s) {
      if (ec) return;
      std::make_shared<ws_detail::Session>(std::move(s), hub_)->start();
      accept_next();
    });
  }

  ws_detail::Hub hub_;
  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::acceptor acceptor_;
  std::thread thread_;
  int port_ = 0;
  SinkHub::Id collector_id_ = 0;
};

}  // namespace gazetrack
