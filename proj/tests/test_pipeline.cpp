#include <gtest/gtest.h>

#include <random>

#include "gazetrack/eval.hpp"
#include "gazetrack/pipeline.hpp"
#include "gazetrack/stream.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

using namespace gazetrack;

namespace {

template <class F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

void expect_fields_match_status(const FrameResult& r, bool calibrated) {
  switch (r.status) {
    case FrameStatus::Ok:
      EXPECT_TRUE(r.iris && r.corner && r.delta);
      EXPECT_EQ(r.screen.has_value(), calibrated);
      break;
    case FrameStatus::NotCalibrated:
      EXPECT_TRUE(r.iris && r.corner);
      EXPECT_FALSE(r.delta || r.screen);
      break;
    case FrameStatus::NoCorner:
      EXPECT_TRUE(r.iris);
      EXPECT_FALSE(r.corner || r.delta || r.screen);
      break;
    case FrameStatus::IrisOcclusion:
    case FrameStatus::NoEye:
      EXPECT_FALSE(r.iris || r.corner || r.delta || r.screen);
      break;
  }
}

bool same_result(const FrameResult& a, const FrameResult& b) {
  return result_digest(0, a) == result_digest(0, b) && a.status == b.status && a.inlier_count == b.inlier_count;
}

}  // namespace

class CalibratedPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    sweep_ = new scenes::Sweep(scenes::make_sweep({}, {}, 0, 0));
    cal_ = new CalibrationMap(calibrate_from_knots(sweep_->knot_a.image, sweep_->cross_a, sweep_->knot_b.image,
                                                   sweep_->cross_b, {}));
  }
  static void TearDownTestSuite() {
    delete sweep_;
    delete cal_;
  }
  static scenes::Sweep* sweep_;
  static CalibrationMap* cal_;
};
scenes::Sweep* CalibratedPipeline::sweep_ = nullptr;
CalibrationMap* CalibratedPipeline::cal_ = nullptr;

TEST_F(CalibratedPipeline, CleanEyeIsOk) {
  const SyntheticEye e = render({});
  const FrameResult r = process_frame(e.image, cal_);
  ASSERT_EQ(r.status, FrameStatus::Ok);
  EXPECT_LE(std::hypot(r.iris->a - e.truth.iris.a, r.iris->b - e.truth.iris.b), 1.0);
  EXPECT_NEAR(r.iris->r, e.truth.iris.r, 1.0);
  ASSERT_TRUE(r.screen.has_value());
  EXPECT_FALSE(r.screen->off_screen);
  EXPECT_NEAR(r.screen->p.x, sweep_->reference.x, 40);
  EXPECT_NEAR(r.screen->p.y, sweep_->reference.y, 40);
  EXPECT_GE(r.inlier_count, min_inliers(r.iris->r));
  EXPECT_GT(r.proc_us, 0.0);
}

TEST_F(CalibratedPipeline, KnotsMapToCrosses) {
  for (const auto& [img, cross] : {std::pair{&sweep_->knot_a.image, sweep_->cross_a}, std::pair{&sweep_->knot_b.image, sweep_->cross_b}}) {
    const FrameResult r = process_frame(*img, cal_);
    ASSERT_EQ(r.status, FrameStatus::Ok);
    EXPECT_NEAR(r.screen->p.x, cross.x, 1e-6);
    EXPECT_NEAR(r.screen->p.y, cross.y, 1e-6);
  }
}

TEST_F(CalibratedPipeline, HeadMotionLeavesGazeUnchanged) {
  SyntheticEyeSpec s;
  s.noise_sigma = 0;
  const FrameResult a = process_frame(render(s).image, cal_);
  ASSERT_EQ(a.status, FrameStatus::Ok);
  for (auto [dx, dy] : {std::pair{24, 0}, std::pair{-40, 16}, std::pair{8, -24}}) {
    s.offset_x = dx;
    s.offset_y = dy;
    const FrameResult b = process_frame(render(s).image, cal_);
    ASSERT_EQ(b.status, FrameStatus::Ok);
    EXPECT_NEAR(b.screen->p.x, a.screen->p.x, 1e-6);
    EXPECT_NEAR(b.screen->p.y, a.screen->p.y, 1e-6);
  }
}

TEST(Pipeline, UncalibratedStopsAfterCorner) {
  const FrameResult r = process_frame(render({}).image, nullptr);
  EXPECT_EQ(r.status, FrameStatus::NotCalibrated);
  expect_fields_match_status(r, false);
}

TEST(Pipeline, HeavyOcclusion) {
  SyntheticEyeSpec s;
  s.eyelid_coverage = 0.75;
  FrameTrace tr;
  const FrameResult r = process_frame(render(s).image, nullptr, {}, &tr);
  EXPECT_EQ(r.status, FrameStatus::IrisOcclusion);
  expect_fields_match_status(r, false);
  EXPECT_FALSE(tr.failure.empty());
}

TEST(Pipeline, BlankImageHasNoEye) {
  const FrameResult r = process_frame(GrayImage(640, 480, std::uint8_t{180}), nullptr);
  EXPECT_EQ(r.status, FrameStatus::NoEye);
  expect_fields_match_status(r, false);
}

TEST(Pipeline, NeverThrowsOnArbitraryInput) {
  std::mt19937 rng(77);
  std::vector<GrayImage> inputs{GrayImage(640, 480, std::uint8_t{0}), GrayImage(640, 480, std::uint8_t{255}),
                                GrayImage(1, 1), GrayImage(15, 9), GrayImage(17, 23, std::uint8_t{3})};
  for (int i = 0; i < 60; ++i) {
    inputs.push_back(oracle::random_image(rng, 8 + static_cast<int>(rng() % 700), 8 + static_cast<int>(rng() % 500)));
  }
  for (int i = 0; i < 20; ++i) {
    GrayImage img(640, 480, std::uint8_t{200});
    for (int k = 0; k < 6; ++k) {
      const int x0 = static_cast<int>(rng() % 600), y0 = static_cast<int>(rng() % 440);
      const int w = 1 + static_cast<int>(rng() % 120), h = 1 + static_cast<int>(rng() % 80);
      const auto v = static_cast<std::uint8_t>(rng() % 256);
      for (int y = y0; y < std::min(480, y0 + h); ++y) {
        for (int x = x0; x < std::min(640, x0 + w); ++x) img.at(x, y) = v;
      }
    }
    inputs.push_back(img);
  }
  CalibrationMap cal;
  cal.px_to_mm = 0.15;
  for (const auto& img : inputs) {
    FrameResult r;
    EXPECT_NO_THROW(r = process_frame(img, &cal));
    expect_fields_match_status(r, true);
  }
}

TEST_F(CalibratedPipeline, StatusFieldCouplingOnRandomScenes) {
  std::mt19937 rng(2024);
  std::map<FrameStatus, int> seen;
  for (int i = 0; i < 60; ++i) {
    const SyntheticEyeSpec s = scenes::random_spec(rng, 0.0, 0.9);
    const FrameResult r = process_frame(render(s).image, i % 2 ? cal_ : nullptr);
    expect_fields_match_status(r, i % 2 == 1);
    ++seen[r.status];
  }
  EXPECT_GT(seen[FrameStatus::IrisOcclusion], 0);
  EXPECT_GT(seen[FrameStatus::Ok] + seen[FrameStatus::NotCalibrated], 0);
}

TEST_F(CalibratedPipeline, Deterministic) {
  std::mt19937 rng(5);
  for (int i = 0; i < 10; ++i) {
    const GrayImage img = render(scenes::random_spec(rng, 0.0, 0.7)).image;
    EXPECT_TRUE(same_result(process_frame(img, cal_), process_frame(img, cal_)));
  }
}

TEST(Pipeline, CropsToMultipleOfFactor) {
  const GrayImage img = render({}).image;
  const GrayImage odd = img.crop({0, 0, 636, 477});
  const FrameResult a = process_frame(img.crop({0, 0, 631, 471}), nullptr), b = process_frame(odd, nullptr);
  EXPECT_TRUE(same_result(a, b));
}

TEST(Pipeline, MinInliersGate) {
  EXPECT_EQ(min_inliers(3.0), 6);
  EXPECT_EQ(min_inliers(40.0), 40);
  EXPECT_EQ(min_inliers(39.2), 40);
}

class CalibrationSequence : public ::testing::Test {
 protected:
  void SetUp() override { sweep_ = scenes::make_sweep({}, {}, 0, 0); }
  scenes::Sweep sweep_;
};

TEST_F(CalibrationSequence, KnotFramesReproduceCrosses) {
  std::vector<GrayImage> frames(kCalibrationDwell, sweep_.knot_a.image);
  frames.insert(frames.end(), kCalibrationDwell, sweep_.knot_b.image);
  VectorSource src(frames);
  const CalibrationMap cal = run_calibration_sequence(src, sweep_.screen, sweep_.cross_a, sweep_.cross_b, {});
  const CalibrationMap direct = calibrate_from_knots(sweep_.knot_a.image, sweep_.cross_a, sweep_.knot_b.image, sweep_.cross_b, {});
  EXPECT_DOUBLE_EQ(cal.px_to_mm, direct.px_to_mm);
  EXPECT_DOUBLE_EQ(cal.x.alpha, direct.x.alpha);
  for (const auto& [img, cross] : {std::pair{&sweep_.knot_a.image, sweep_.cross_a}, std::pair{&sweep_.knot_b.image, sweep_.cross_b}}) {
    const FrameResult r = process_frame(*img, &cal);
    ASSERT_EQ(r.status, FrameStatus::Ok);
    EXPECT_NEAR(r.screen->p.x, cross.x, 1e-6);
    EXPECT_NEAR(r.screen->p.y, cross.y, 1e-6);
  }
}

TEST_F(CalibrationSequence, HalfOccludedFramesStillCalibrate) {
  SyntheticEyeSpec occluded;
  occluded.eyelid_coverage = 0.8;
  const GrayImage bad = render(occluded).image;
  std::vector<GrayImage> frames;
  for (const auto* knot : {&sweep_.knot_a.image, &sweep_.knot_b.image}) {
    for (int i = 0; i < kCalibrationDwell; ++i) frames.push_back(i % 2 ? bad : *knot);
  }
  VectorSource src(frames);
  const CalibrationMap cal = run_calibration_sequence(src, sweep_.screen, sweep_.cross_a, sweep_.cross_b, {});
  const FrameResult r = process_frame(sweep_.knot_b.image, &cal);
  ASSERT_EQ(r.status, FrameStatus::Ok);
  EXPECT_NEAR(r.screen->p.x, sweep_.cross_b.x, 1e-6);
  EXPECT_NEAR(r.screen->p.y, sweep_.cross_b.y, 1e-6);
}

TEST_F(CalibrationSequence, TooFewValidFramesFails) {
  VectorSource blank(std::vector<GrayImage>(2 * kCalibrationDwell, GrayImage(640, 480, std::uint8_t{180})));
  EXPECT_EQ(code_of([&] { run_calibration_sequence(blank, sweep_.screen, sweep_.cross_a, sweep_.cross_b, {}); }),
            ErrorCode::CalibrationFailed);
  // Nine valid frames per cross is one short.
  std::vector<GrayImage> frames;
  for (const auto* knot : {&sweep_.knot_a.image, &sweep_.knot_b.image}) {
    for (int i = 0; i < kCalibrationDwell; ++i) frames.push_back(i < kCalibrationMinValid - 1 ? *knot : GrayImage(640, 480, std::uint8_t{180}));
  }
  VectorSource short_src(frames);
  EXPECT_EQ(code_of([&] { run_calibration_sequence(short_src, sweep_.screen, sweep_.cross_a, sweep_.cross_b, {}); }),
            ErrorCode::CalibrationFailed);
}

TEST(Bench, SchemaAndChecksum) {
  std::mt19937 rng(8);
  std::vector<GrayImage> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(render(scenes::random_spec(rng, 0.0, 0.8)).image);
  const BenchReport a = bench(frames, nullptr, {}, 1, 40), b = bench(frames, nullptr, {}, 1, 40);
  EXPECT_EQ(a.frames, 40u);
  EXPECT_GT(a.fps, 0.0);
  EXPECT_GT(a.mean_us, 0.0);
  EXPECT_LE(a.median_us, a.p99_us);
  EXPECT_EQ(a.checksum.size(), 16u);
  EXPECT_EQ(a.checksum, b.checksum);
  EXPECT_EQ(a.ok, b.ok);
  EXPECT_EQ(code_of([] { bench({}, nullptr, {}); }), ErrorCode::InvalidArgument);
}
