#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "edgemlp/edge_features.hpp"
#include "expect_code.hpp"
#include "oracles.hpp"

using namespace edgemlp;

namespace {

Matrix step_image(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 2; c < n; ++c) m(r, c) = 1.0f;
  }
  return m;
}

Matrix random_image(std::mt19937_64& gen) {
  Matrix m(28, 28);
  for (auto& v : m.data()) v = static_cast<float>(gen() % 256) / 255.0f;
  return m;
}

}  // namespace

TEST(Sobel, ConstantImageGivesZero) {
  const GradientPair g = sobel_derivatives(Matrix(28, 28, 0.37f));
  for (const float v : g.gx.data()) EXPECT_EQ(v, 0.0f);
  for (const float v : g.gy.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Sobel, VerticalStepEdge) {
  const GradientPair g = sobel_derivatives(step_image(5));
  for (std::size_t r = 1; r < 4; ++r) {
    EXPECT_EQ(g.gx(r, 2), 4.0f);
    EXPECT_EQ(g.gy(r, 2), 0.0f);
  }
}

TEST(Sobel, TransposedStepEdge) {
  const GradientPair g = sobel_derivatives(transpose(step_image(5)));
  for (std::size_t c = 1; c < 4; ++c) {
    EXPECT_EQ(g.gx(2, c), 0.0f);
    EXPECT_EQ(g.gy(2, c), 4.0f);
  }
}

TEST(Sobel, MatchesNaiveOracleOnRandomImages) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix img = random_image(gen);
    const GradientPair g = sobel_derivatives(img);
    ASSERT_EQ(g.gx, oracle::correlate3x3(img, oracle::kGx)) << "trial " << trial;
    ASSERT_EQ(g.gy, oracle::correlate3x3(img, oracle::kGy)) << "trial " << trial;
  }
}

TEST(Sobel, OddShapesMatchOracle) {
  std::mt19937_64 gen(5);
  for (const auto& [r, c] : {std::pair{2, 2}, std::pair{3, 7}, std::pair{9, 4}}) {
    const Matrix img = oracle::random_matrix(r, c, gen, 0.0f, 1.0f);
    EXPECT_EQ(sobel_derivatives(img).gx, oracle::correlate3x3(img, oracle::kGx));
  }
}

TEST(Sobel, Separable) {
  std::mt19937_64 gen(6);
  const float smooth[3][3] = {{0, 1, 0}, {0, 2, 0}, {0, 1, 0}};
  const float diff[3][3] = {{0, 0, 0}, {-1, 0, 1}, {0, 0, 0}};
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix img = random_image(gen);
    const Matrix two_pass = oracle::correlate3x3(oracle::correlate3x3(img, smooth), diff);
    const Matrix direct = sobel_derivatives(img).gx;
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(two_pass.data()[i], direct.data()[i], 1e-6);
  }
}

TEST(Sobel, RangeBoundedByFour) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 100; ++trial) {
    const GradientPair g = sobel_derivatives(random_image(gen));
    for (const float v : g.gx.data()) ASSERT_LE(std::fabs(v), 4.0f);
    for (const float v : g.gy.data()) ASSERT_LE(std::fabs(v), 4.0f);
  }
}

TEST(Sobel, Errors) {
  Matrix bad(28, 28);
  bad(3, 3) = std::nanf("");
  EXPECT_EQ(code_of([&] { sobel_derivatives(bad); }), ErrorCode::NonFiniteInput);
  bad(3, 3) = INFINITY;
  EXPECT_EQ(code_of([&] { sobel_derivatives(bad); }), ErrorCode::NonFiniteInput);
  EXPECT_EQ(code_of([] { sobel_derivatives(Matrix(1, 5)); }), ErrorCode::ShapeMismatch);
}

TEST(MinMax, Endpoints) {
  const Matrix out = minmax_normalize(Matrix(1, 3, {-4, 0, 4}), kMinMaxEpsilon);
  EXPECT_NEAR(out(0, 0), 0.0f, 1e-7);
  EXPECT_NEAR(out(0, 1), 0.5f, 1e-7);
  EXPECT_NEAR(out(0, 2), 1.0f, 1e-7);
}

TEST(MinMax, ConstantChannelIsZero) {
  // Denominator is epsilon alone; numerator is exactly 0.
  for (const float c : {0.0f, 2.5f, -3.0f}) {
    const Matrix out = minmax_normalize(Matrix(28, 28, c), kMinMaxEpsilon);
    for (const float v : out.data()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(MinMax, EpsilonKeepsMaxBelowOneInExactArithmetic) {
  // In float the ratio range / (range + 1e-8) rounds to 1 once range > ~0.17,
  // so the strict bound is checked in double and [0, 1] in float.
  const double range = 1e-7;
  EXPECT_LT(range / (range + 1e-8), 1.0);
  const Matrix small = minmax_normalize(Matrix(1, 2, {0.0f, 1e-7f}), kMinMaxEpsilon);
  EXPECT_LT(small(0, 1), 1.0f);
  EXPECT_NEAR(small(0, 1), 1e-7 / (1e-7 + 1e-8), 1e-6);
}

TEST(MinMax, MonotoneAndAffineInvariant) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix v = oracle::random_matrix(1, 40, gen, -3.0f, 3.0f);
    const Matrix base = minmax_normalize(v, kMinMaxEpsilon);
    for (std::size_t i = 0; i < v.size(); ++i) {
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v.data()[i] < v.data()[j]) {
          ASSERT_LE(base.data()[i], base.data()[j]);
        }
      }
    }
    Matrix scaled = v;
    for (auto& x : scaled.data()) x = 2.5f * x + 7.0f;
    const Matrix moved = minmax_normalize(scaled, kMinMaxEpsilon);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(moved.data()[i], base.data()[i], 1e-5);
  }
}

TEST(Featurize, LayoutIsChannelMajorRowMajor) {
  std::mt19937_64 gen(10);
  const Matrix img = random_image(gen);
  const auto f = featurize(img);
  ASSERT_EQ(f.size(), kFeatureDim);
  const Matrix gx = minmax_normalize(oracle::correlate3x3(img, oracle::kGx), kMinMaxEpsilon);
  const Matrix gy = minmax_normalize(oracle::correlate3x3(img, oracle::kGy), kMinMaxEpsilon);
  for (std::size_t i = 0; i < 784; ++i) {
    EXPECT_EQ(f[i], gx.data()[i]);
    EXPECT_EQ(f[784 + i], gy.data()[i]);
  }
}

TEST(Featurize, ConstantImageIsZeroVector) {
  for (const float v : featurize(Matrix(28, 28, 0.8f))) EXPECT_EQ(v, 0.0f);
}

TEST(Featurize, RangeAndFiniteness) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    for (const float v : featurize(random_image(gen))) {
      ASSERT_TRUE(std::isfinite(v));
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

// Transposition permutes the Sobel taps, so the sums run in a different
// order; equality holds up to float rounding.
TEST(Featurize, TransposeSwapsChannels) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix img = random_image(gen);
    const auto f = featurize(img);
    const auto ft = featurize(transpose(img));
    for (std::size_t r = 0; r < 28; ++r) {
      for (std::size_t c = 0; c < 28; ++c) {
        ASSERT_NEAR(ft[r * 28 + c], f[784 + c * 28 + r], 1e-6);
        ASSERT_NEAR(ft[784 + r * 28 + c], f[c * 28 + r], 1e-6);
      }
    }
  }
}

TEST(Featurize, WrongShape) {
  EXPECT_EQ(code_of([] { featurize(Matrix(27, 28)); }), ErrorCode::BadImageShape);
  EXPECT_EQ(code_of([] { to_unit_image(std::vector<std::uint8_t>(783)); }), ErrorCode::BadImageShape);
}

TEST(Diagnostics, KnownAngles) {
  GradientPair p{Matrix(1, 4, {3, 0, 1, 0}), Matrix(1, 4, {4, 0, 0, 1})};
  const EdgeDiagnostics d = gradient_diagnostics(p);
  EXPECT_FLOAT_EQ(d.magnitude(0, 0), 5.0f);
  EXPECT_NEAR(d.orientation(0, 0), 0.9273f, 1e-4);
  EXPECT_EQ(d.magnitude(0, 1), 0.0f);
  EXPECT_EQ(d.orientation(0, 1), 0.0f);
  EXPECT_EQ(d.orientation(0, 2), 0.0f);
  EXPECT_FLOAT_EQ(d.orientation(0, 3), std::numbers::pi_v<float> / 2);
}

TEST(Diagnostics, OrientationInHalfOpenRange) {
  std::mt19937_64 gen(13);
  const GradientPair g = sobel_derivatives(random_image(gen));
  const EdgeDiagnostics d = gradient_diagnostics(g);
  for (std::size_t i = 0; i < d.magnitude.size(); ++i) {
    EXPECT_GE(d.magnitude.data()[i], 0.0f);
    EXPECT_GT(d.orientation.data()[i], -std::numbers::pi_v<float>);
    EXPECT_LE(d.orientation.data()[i], std::numbers::pi_v<float>);
  }
}

TEST(FeaturizeBatch, RowsMatchSingleImagePathAndThreadCountIsIrrelevant) {
  LabeledImageSet set;
  set.class_count = 3;
  set.name = "synthetic";
  std::mt19937_64 gen(14);
  for (int i = 0; i < 37; ++i) {
    for (int p = 0; p < 784; ++p) set.images.push_back(static_cast<std::uint8_t>(gen() % 256));
    set.labels.push_back(static_cast<std::uint8_t>(i % 3));
  }
  const FeatureSet one = featurize_batch(set, 1);
  const FeatureSet four = featurize_batch(set, 4);
  EXPECT_EQ(one.features, four.features);
  EXPECT_EQ(one.labels, set.labels);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto f = featurize(to_unit_image(set.image(i)));
    ASSERT_TRUE(std::equal(f.begin(), f.end(), one.features.row(i).begin()));
  }
}

TEST(FeaturizeBatch, EmptySet) {
  LabeledImageSet set;
  set.class_count = 10;
  const FeatureSet f = featurize_batch(set, 2);
  EXPECT_EQ(f.features.rows(), 0u);
  EXPECT_EQ(f.features.cols(), kFeatureDim);
}

TEST(FeaturizeBatch, InvalidSetReported) {
  LabeledImageSet set;
  set.class_count = 2;
  set.images.assign(784, 0);
  set.labels = {5};
  EXPECT_EQ(code_of([&] { featurize_batch(set, 1); }), ErrorCode::LabelOutOfRange);
}
