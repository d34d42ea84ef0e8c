#include <gtest/gtest.h>

#include <chrono>
#include <functional>
#include <thread>

#include "gazetrack/eval.hpp"
#include "gazetrack/ws_server.hpp"
#include "scenes.hpp"

using namespace gazetrack;
namespace beast = boost::beast;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Client {
 public:
  explicit Client(int port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
  }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  /// Reads until `pred` holds; returns every message read.
  std::vector<json> read_until(const std::function<bool(const json&)>& pred, int limit = 1000) {
    std::vector<json> out;
    for (int i = 0; i < limit; ++i) {
      out.push_back(read());
      if (pred(out.back())) break;
    }
    return out;
  }

  void send(const json& j) { ws_.write(net::buffer(j.dump())); }

 private:
  net::io_context ioc_;
  beast::websocket::stream<tcp::socket> ws_;
};

bool is_type(const json& j, const char* t) { return j.is_object() && j.value("type", "") == t; }

template <class P>
bool wait_for(P pred, int ms = 5000) {
  const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
  while (std::chrono::steady_clock::now() < until) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return pred();
}

std::vector<GrayImage> eye_frames(int n) { return std::vector<GrayImage>(static_cast<std::size_t>(n), render({}).image); }

class WsTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_ = std::make_unique<WsServer>(sinks_, slot_, cfg_, 10);
    server_->start(0, "127.0.0.1");
    base_sinks_ = sinks_.size();
  }
  void TearDown() override { server_->stop(); }

  bool clients_registered(std::size_t n) {
    return wait_for([&] { return sinks_.size() == base_sinks_ + n; });
  }

  PipelineConfig cfg_;
  SinkHub sinks_;
  CalibrationSlot slot_;
  std::unique_ptr<WsServer> server_;
  std::size_t base_sinks_ = 0;
};

}  // namespace

TEST_F(WsTest, HelloOnConnect) {
  ASSERT_GT(server_->port(), 0);
  Client c(server_->port());
  const json hello = c.read();
  EXPECT_EQ(hello, hello_message(cfg_.screen, false));
}

TEST_F(WsTest, EveryClientReceivesEveryFrame) {
  Client a(server_->port()), b(server_->port());
  ASSERT_TRUE(clients_registered(2));
  VectorSource src(eye_frames(10));
  run_stream(src, slot_, sinks_, cfg_);
  for (Client* c : {&a, &b}) {
    EXPECT_TRUE(is_type(c->read(), "hello"));
    const auto msgs = c->read_until([](const json& j) { return is_type(j, "end"); });
    ASSERT_EQ(msgs.size(), 11u);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(msgs[i]["frame_id"], i);
      EXPECT_EQ(msgs[i]["status"], "NotCalibrated");
      EXPECT_FALSE(msgs[i].contains("type"));
    }
    EXPECT_EQ(msgs.back(), end_message(10, 0));
  }
}

TEST_F(WsTest, LateClientGetsOnlySubsequentFrames) {
  Client early(server_->port());
  ASSERT_TRUE(clients_registered(1));
  VectorSource src(eye_frames(60));
  src.fps = 200;
  StreamOptions opt;
  opt.pace = true;
  std::thread t([&] { run_stream(src, slot_, sinks_, cfg_, opt); });
  EXPECT_TRUE(is_type(early.read(), "hello"));
  const auto first = early.read_until([](const json& j) { return j.value("frame_id", 0) >= 10; });
  Client late(server_->port());
  EXPECT_TRUE(is_type(late.read(), "hello"));
  const auto msgs = late.read_until([](const json& j) { return is_type(j, "end"); });
  t.join();
  ASSERT_GE(msgs.size(), 2u);
  const std::uint64_t start = msgs.front()["frame_id"];
  EXPECT_GT(start, 10u);
  for (std::size_t i = 0; i + 1 < msgs.size(); ++i) EXPECT_EQ(msgs[i]["frame_id"], start + i);
  EXPECT_EQ(msgs.back()["frames"], 60);
}

TEST_F(WsTest, CalibrateAndRecalibrateCommands) {
  const auto sweep = scenes::make_sweep({}, {}, 0, 0);
  Client c(server_->port());
  EXPECT_TRUE(is_type(c.read(), "hello"));
  c.send({{"cmd", "calibrate"},
          {"crosses", json::array({{{"x", sweep.cross_a.x}, {"y", sweep.cross_a.y}},
                                   {{"x", sweep.cross_b.x}, {"y", sweep.cross_b.y}}})}});
  ASSERT_TRUE(wait_for([&] { return server_->collector().active(); }));
  std::vector<GrayImage> frames(10, sweep.knot_a.image);
  frames.insert(frames.end(), 10, sweep.knot_b.image);
  frames.insert(frames.end(), 3, sweep.knot_a.image);
  VectorSource src(frames);
  run_stream(src, slot_, sinks_, cfg_);
  const auto msgs = c.read_until([](const json& j) { return is_type(j, "end"); });
  const auto cal = std::find_if(msgs.begin(), msgs.end(), [](const json& j) { return is_type(j, "calibration"); });
  ASSERT_NE(cal, msgs.end());
  EXPECT_EQ((*cal)["ok"], true) << cal->dump();
  EXPECT_TRUE((*cal)["calibration"].contains("px_to_mm"));
  EXPECT_TRUE(slot_.calibrated());
  // Frames after calibration carry a screen point on the first cross.
  const json& last = msgs[msgs.size() - 2];
  EXPECT_EQ(last["status"], "Ok");
  EXPECT_NEAR(last["screen"]["x"].get<double>(), sweep.cross_a.x, 1e-6);

  c.send({{"cmd", "recalibrate"}});
  EXPECT_TRUE(is_type(c.read(), "recalibrated"));
  EXPECT_FALSE(slot_.calibrated());
  Client fresh(server_->port());
  EXPECT_EQ(fresh.read()["calibrated"], false);
}

TEST_F(WsTest, FailedCalibrationIsReported) {
  Client c(server_->port());
  EXPECT_TRUE(is_type(c.read(), "hello"));
  c.send({{"cmd", "calibrate"}, {"crosses", json::array({{{"x", 96}, {"y", 1026}}, {{"x", 1824}, {"y", 54}}})}});
  ASSERT_TRUE(wait_for([&] { return server_->collector().active(); }));
  VectorSource src(std::vector<GrayImage>(20, GrayImage(640, 480, std::uint8_t{180})));
  run_stream(src, slot_, sinks_, cfg_);
  const auto msgs = c.read_until([](const json& j) { return is_type(j, "calibration"); });
  EXPECT_EQ(msgs.back()["ok"], false);
  EXPECT_TRUE(msgs.back().contains("error"));
  EXPECT_FALSE(slot_.calibrated());
}

TEST_F(WsTest, BadCommandsGetErrors) {
  Client c(server_->port());
  EXPECT_TRUE(is_type(c.read(), "hello"));
  c.send("not json at all");
  EXPECT_TRUE(is_type(c.read(), "error"));
  c.send({{"cmd", "dance"}});
  EXPECT_TRUE(is_type(c.read(), "error"));
  c.send({{"cmd", "calibrate"}, {"crosses", json::array({{{"x", 1}, {"y", 2}}})}});
  const json e = c.read();
  EXPECT_TRUE(is_type(e, "error"));
  EXPECT_NE(e["message"].get<std::string>().find("calibrate"), std::string::npos);
  EXPECT_FALSE(server_->collector().active());
}

TEST_F(WsTest, PortInUse) {
  SinkHub other_sinks;
  CalibrationSlot other_slot;
  WsServer other(other_sinks, other_slot, cfg_);
  try {
    other.start(server_->port(), "127.0.0.1");
    FAIL() << "second bind succeeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Io);
  }
}
