#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "longlens/metrics.hpp"
#include "longlens/temporal.hpp"
#include "support.hpp"

using namespace longlens;
using longlens::testing::random_unit_image;

namespace {

GrayImage constant(double v) { return GrayImage(6, 5, IntensityScale::Unit, v); }

EyeSequence sequence(std::vector<std::pair<double, GrayImage>> frames) {
  EyeSequence s;
  s.eye_id = "eye";
  s.laterality = Laterality::Right;
  for (auto& [t, img] : frames) s.frames.push_back({img, full_mask(img.width(), img.height()), t});
  return s;
}

}  // namespace

TEST(CopyLast, ReturnsLastFrameBitExact) {
  std::mt19937_64 rng(1);
  const auto a = random_unit_image(8, 8, rng), b = random_unit_image(8, 8, rng);
  EXPECT_EQ(copy_last(sequence({{0.0, a}, {1.0, b}}), 2.0), b);
  EXPECT_EQ(copy_last(sequence({{0.0, a}}), 0.5), a);
}

TEST(CopyLast, PerfectWhenTargetEqualsLast) {
  std::mt19937_64 rng(2);
  const auto a = random_unit_image(10, 10, rng), b = random_unit_image(10, 10, rng);
  const auto pred = copy_last(sequence({{0.0, a}, {1.0, b}}), 1.5);
  const auto m = full_mask(10, 10);
  EXPECT_EQ(mae(pred, b, m), 0.0);
  EXPECT_TRUE(std::isinf(psnr(pred, b, m)));
  EXPECT_NEAR(ssim(pred, b), 1.0, 1e-12);
}

TEST(CopyLast, EmptySequenceThrows) { EXPECT_THROW(copy_last(EyeSequence{}, 1.0), EmptySequenceError); }

TEST(LinearSpline, ExtrapolatesLine) {
  const auto out = linear_spline(sequence({{0.0, constant(0.2)}, {1.0, constant(0.4)}}), 2.0);
  for (double v : out.pixels()) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(LinearSpline, ZeroGapReturnsLast) {
  std::mt19937_64 rng(3);
  const auto a = random_unit_image(6, 5, rng), b = random_unit_image(6, 5, rng);
  EXPECT_EQ(linear_spline(sequence({{0.0, a}, {0.7, b}}), 0.7), b);
}

TEST(LinearSpline, ClampsToUnitRange) {
  const auto out = linear_spline(sequence({{0.0, constant(0.5)}, {1.0, constant(0.9)}}), 2.0);
  for (double v : out.pixels()) EXPECT_EQ(v, 1.0);
  const auto low = linear_spline(sequence({{0.0, constant(0.5)}, {1.0, constant(0.1)}}), 2.0);
  for (double v : low.pixels()) EXPECT_EQ(v, 0.0);
}

TEST(LinearSpline, UsesOnlyLastTwoFrames) {
  const auto out =
      linear_spline(sequence({{0.0, constant(0.9)}, {1.0, constant(0.2)}, {2.0, constant(0.4)}}), 3.0);
  for (double v : out.pixels()) EXPECT_NEAR(v, 0.6, 1e-15);
}

TEST(LinearSpline, Errors) {
  EXPECT_THROW(linear_spline(sequence({{0.0, constant(0.2)}}), 1.0), InsufficientHistoryError);
  EXPECT_THROW(linear_spline(sequence({{1.0, constant(0.2)}, {1.0, constant(0.4)}}), 2.0), DegenerateTimesError);
}

TEST(LinearSplineProperty, FlatHistoryReducesToCopyLast) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_unit_image(7, 7, rng);
    const auto s = sequence({{0.0, a}, {0.5, a}});
    EXPECT_EQ(linear_spline(s, 1.0 + trial), copy_last(s, 1.0 + trial));
  }
}

TEST(LinearSplineProperty, MatchesTwoPointLineWhenInRange) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.3, 0.7), step(-0.05, 0.05), dt(0.1, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    GrayImage a(9, 9), b(9, 9);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(rng);
      b[i] = a[i] + step(rng);
    }
    const double t0 = dt(rng), t1 = t0 + dt(rng), ts = t1 + dt(rng);
    const auto out = linear_spline(sequence({{t0, a}, {t1, b}}), ts);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double slope = (b[i] - a[i]) / (t1 - t0);
      ASSERT_NEAR(out[i], a[i] + slope * (ts - t0), 1e-12);
    }
  }
}

TEST(DeltaEmbedding, ZeroGapAlternates) {
  const auto e = delta_embedding(0.0);
  for (int i = 0; i < kDeltaEmbeddingPairs; ++i) {
    EXPECT_EQ(e.values[static_cast<std::size_t>(2 * i)], 0.0);
    EXPECT_EQ(e.values[static_cast<std::size_t>(2 * i + 1)], 1.0);
  }
}

TEST(DeltaEmbedding, AnalyticFirstPair) {
  const auto e = delta_embedding(std::exp(1.0) - 1.0);
  EXPECT_NEAR(e.values[0], 0.841471, 1e-6);
  EXPECT_NEAR(e.values[1], 0.540302, 1e-6);
  EXPECT_NEAR(e.values[0], std::sin(1.0), 1e-15);
}

TEST(DeltaEmbedding, FrequencyLadder) {
  EXPECT_EQ(delta_frequency(0), 1.0);
  EXPECT_NEAR(delta_frequency(127), 0.01, 1e-12);
  for (int i = 1; i < kDeltaEmbeddingPairs; ++i) EXPECT_LT(delta_frequency(i), delta_frequency(i - 1));
}

TEST(DeltaEmbedding, NegativeThrows) { EXPECT_THROW(delta_embedding(-0.01), NegativeDeltaError); }

TEST(DeltaEmbeddingProperty, UnitPairsAndInjectiveOnGrid) {
  std::vector<DeltaEmbedding> grid;
  for (int k = 0; k <= 100; ++k) grid.push_back(delta_embedding(0.1 * k));
  for (const auto& e : grid)
    for (int i = 0; i < kDeltaEmbeddingPairs; ++i) {
      const double s = e.values[static_cast<std::size_t>(2 * i)], c = e.values[static_cast<std::size_t>(2 * i + 1)];
      ASSERT_NEAR(s * s + c * c, 1.0, 1e-12);
    }
  for (std::size_t a = 0; a < grid.size(); ++a)
    for (std::size_t b = a + 1; b < grid.size(); ++b) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < grid[a].values.size(); ++j) {
        const double d = grid[a].values[j] - grid[b].values[j];
        d2 += d * d;
      }
      ASSERT_GT(d2, 0.0);
    }
}

TEST(EyeSequence, ValidateRejectsBadTimesAndShapes) {
  EXPECT_THROW(sequence({{1.0, constant(0.1)}, {0.5, constant(0.1)}}).validate(), DegenerateTimesError);
  EXPECT_THROW(sequence({{0.0, constant(0.1)}, {1.0, GrayImage(3, 3)}}).validate(), DimensionError);
  EXPECT_THROW(EyeSequence{}.validate(), EmptySequenceError);
  EXPECT_NO_THROW(sequence({{0.0, constant(0.1)}, {1.0, constant(0.2)}}).validate());
}

TEST(Laterality, StringRoundTrip) {
  for (auto l : {Laterality::Left, Laterality::Right, Laterality::Unknown})
    EXPECT_EQ(laterality_from_string(to_string(l)), l);
}
