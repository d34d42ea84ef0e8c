#include <gtest/gtest.h>

#include <random>
#include <set>
#include <vector>

#include "gazetrack/image.hpp"
#include "oracles.hpp"

using namespace gazetrack;

TEST(Downsample, EightyBySixty) {
  const GrayImage img(640, 480, std::uint8_t{77});
  const GrayImage low = downsample(img, 8);
  EXPECT_EQ(low.width(), 80);
  EXPECT_EQ(low.height(), 60);
}

TEST(Downsample, ConstantStaysConstant) {
  const GrayImage low = downsample(GrayImage(6, 4, std::uint8_t{100}), 2);
  for (auto v : low.pixels()) EXPECT_EQ(v, 100);
}

TEST(Downsample, RoundsHalfUp) {
  const GrayImage low = downsample(GrayImage(2, 2, std::vector<std::uint8_t>{0, 255, 255, 0}), 2);
  ASSERT_EQ(low.width(), 1);
  EXPECT_EQ(low.at(0, 0), 128);
}

TEST(Downsample, RejectsNonDivisible) {
  try {
    downsample(GrayImage(10, 8), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonDivisibleDimensions);
  }
}

TEST(Downsample, BlockMeanWithinHalfLevel) {
  std::mt19937 rng(11);
  const GrayImage img = oracle::random_image(rng, 64, 48);
  const GrayImage low = downsample(img, 8);
  for (int by = 0; by < 6; ++by) {
    for (int bx = 0; bx < 8; ++bx) {
      double s = 0;
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) s += img.at(bx * 8 + x, by * 8 + y);
      }
      EXPECT_LE(std::abs(low.at(bx, by) - s / 64.0), 0.5);
    }
  }
}

TEST(Isodata, TwoLevels) {
  std::vector<std::uint8_t> px(20, 50);
  std::fill(px.begin() + 10, px.end(), 200);
  EXPECT_EQ(isodata_threshold(GrayImage(20, 1, px)), 125);
}

TEST(Isodata, UniformImage) { EXPECT_EQ(isodata_threshold(GrayImage(7, 5, std::uint8_t{100})), 100); }

TEST(Isodata, MatchesExhaustiveSearch) {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    const GrayImage img = oracle::image_from_random_histogram(rng);
    EXPECT_EQ(isodata_threshold(img), oracle::isodata_exhaustive(img)) << "case " << i;
  }
}

TEST(Isodata, BetweenMinAndMax) {
  std::mt19937 rng(9);
  for (int i = 0; i < 100; ++i) {
    const GrayImage img = oracle::random_image(rng, 1 + static_cast<int>(rng() % 30), 1 + static_cast<int>(rng() % 30));
    const auto [lo, hi] = std::minmax_element(img.pixels().begin(), img.pixels().end());
    const int t = isodata_threshold(img);
    EXPECT_GE(t, *lo);
    EXPECT_LE(t, *hi);
  }
}

TEST(Segment, Examples) {
  const BinaryImage all = segment(GrayImage(3, 3, std::uint8_t{0}), 10);
  EXPECT_EQ(all.count(), 9u);
  EXPECT_EQ(segment(GrayImage(3, 3, std::uint8_t{255}), 10).count(), 0u);
  const BinaryImage m = segment(GrayImage(3, 1, std::vector<std::uint8_t>{5, 200, 10}), 100);
  EXPECT_TRUE(m.at(0, 0));
  EXPECT_FALSE(m.at(1, 0));
  EXPECT_TRUE(m.at(2, 0));
}

TEST(Segment, MonotoneInThreshold) {
  std::mt19937 rng(3);
  const GrayImage img = oracle::random_image(rng, 20, 20);
  for (int t = 0; t < 255; ++t) {
    const BinaryImage a = segment(img, t), b = segment(img, t + 1);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 20; ++x) {
        if (a.at(x, y)) {
          ASSERT_TRUE(b.at(x, y));
        }
      }
    }
  }
}

TEST(Components, EmptyMask) { EXPECT_TRUE(connected_components(BinaryImage(5, 5)).empty()); }

TEST(Components, TwoBlocks) {
  BinaryImage b(10, 5);
  for (int y = 1; y <= 3; ++y) {
    for (int x = 0; x < 3; ++x) {
      b.set(x, y, true);
      b.set(x + 6, y, true);
    }
  }
  const auto r = connected_components(b);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].pixel_count, 9u);
  EXPECT_EQ(r[1].pixel_count, 9u);
  EXPECT_EQ(r[0].bounding_box, (PixelBox{0, 1, 2, 3}));  // equal size and y_min: smaller x_min first
}

TEST(Components, DiagonalTouchIsConnected) {
  BinaryImage b(4, 4);
  b.set(0, 0, true);
  b.set(1, 1, true);
  b.set(2, 1, true);
  b.set(3, 2, true);
  EXPECT_EQ(connected_components(b).size(), 1u);
}

TEST(Components, MatchFloodFillOracle) {
  std::mt19937 rng(21);
  for (int i = 0; i < 50; ++i) {
    const int w = 5 + static_cast<int>(rng() % 40), h = 5 + static_cast<int>(rng() % 40);
    BinaryImage b(w, h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) b.set(x, y, rng() % 100 < 45);
    }
    const auto regions = connected_components(b);
    const auto expected = oracle::flood_fill_regions(b);
    ASSERT_EQ(regions.size(), expected.size());
    std::size_t total = 0;
    for (std::size_t k = 0; k < regions.size(); ++k) {
      EXPECT_EQ(regions[k].pixel_count, expected[k].pixel_count);
      EXPECT_EQ(regions[k].bounding_box, expected[k].bounding_box);
      EXPECT_NEAR(regions[k].centroid_x, expected[k].centroid_x, 1e-9);
      EXPECT_NEAR(regions[k].centroid_y, expected[k].centroid_y, 1e-9);
      EXPECT_TRUE(regions[k].bounding_box.contains(regions[k].centroid_x, regions[k].centroid_y));
      if (k > 0) {
        EXPECT_GE(regions[k - 1].pixel_count, regions[k].pixel_count);
      }
      total += regions[k].pixel_count;
    }
    EXPECT_EQ(total, b.count());
  }
}

TEST(Sobel, ConstantImageIsFlat) {
  const GradientMap g = sobel(GrayImage(6, 5, std::uint8_t{90}));
  for (float v : g.magnitude) EXPECT_EQ(v, 0.0f);
}

TEST(Sobel, VerticalStep) {
  GrayImage img(8, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 4; x < 8; ++x) img.at(x, y) = 255;
  }
  const GradientMap g = sobel(img);
  for (int y = 1; y < 5; ++y) {
    EXPECT_EQ(g.gx[static_cast<std::size_t>(y * 8 + 3)], 1020.0f);
    EXPECT_EQ(g.gx[static_cast<std::size_t>(y * 8 + 4)], 1020.0f);
    EXPECT_EQ(g.gy[static_cast<std::size_t>(y * 8 + 3)], 0.0f);
  }
}

TEST(Sobel, HorizontalStep) {
  GrayImage img(6, 8);
  for (int y = 4; y < 8; ++y) {
    for (int x = 0; x < 6; ++x) img.at(x, y) = 200;
  }
  const GradientMap g = sobel(img);
  for (int x = 1; x < 5; ++x) {
    EXPECT_EQ(g.gx[static_cast<std::size_t>(3 * 6 + x)], 0.0f);
    EXPECT_EQ(g.gy[static_cast<std::size_t>(3 * 6 + x)], 800.0f);
  }
}

TEST(Sobel, BordersAreZeroAndMagnitudeConsistent) {
  std::mt19937 rng(4);
  const GrayImage img = oracle::random_image(rng, 12, 9);
  const GradientMap g = sobel(img);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 12; ++x) {
      const std::size_t i = static_cast<std::size_t>(y * 12 + x);
      if (x == 0 || y == 0 || x == 11 || y == 8) {
        EXPECT_EQ(g.magnitude[i], 0.0f);
      }
      EXPECT_NEAR(g.magnitude[i], std::hypot(g.gx[i], g.gy[i]), 1e-3);
    }
  }
}

TEST(Sobel, ConstantOffsetInvariant) {
  std::mt19937 rng(8);
  GrayImage img = oracle::random_image(rng, 10, 10);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(v / 2);
  GrayImage shifted = img;
  for (auto& v : shifted.pixels()) v = static_cast<std::uint8_t>(v + 60);
  const GradientMap a = sobel(img), b = sobel(shifted);
  EXPECT_EQ(a.gx, b.gx);
  EXPECT_EQ(a.gy, b.gy);
}

TEST(Sobel, TooSmall) {
  try {
    sobel(GrayImage(2, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
}
