#include <gtest/gtest.h>

#include <random>

#include "edgemlp/edge_features.hpp"
#include "edgemlp/image_io.hpp"
#include "edgemlp/saliency.hpp"
#include "expect_code.hpp"
#include "oracles.hpp"

using namespace edgemlp;

namespace {

std::vector<float> random_features(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> f(kFeatureDim);
  for (auto& v : f) v = u(gen);
  return f;
}

// Default network with moving statistics taken from a few train-mode passes,
// so eval-mode BatchNorm is not the identity.
Model warmed_model() {
  Model m = init_model(MlpConfig::for_classes(10), 4);
  std::mt19937_64 gen(5);
  Rng rng(6);
  ForwardCache cache;
  for (int i = 0; i < 20; ++i) forward_train(m, oracle::random_matrix(16, kFeatureDim, gen, 0.0f, 1.0f), rng, cache);
  return m;
}

}  // namespace

TEST(Saliency, ZeroWeightsGiveZeroMaps) {
  const Model m = make_model<float>(MlpConfig::for_classes(10));
  const SaliencyMaps s = saliency(m, random_features(1));
  for (const float v : s.gx.data()) ASSERT_EQ(v, 0.0f);
  for (const float v : s.gy.data()) ASSERT_EQ(v, 0.0f);
  EXPECT_EQ(s.predicted_class, 0u);
}

TEST(Saliency, LinearModelReturnsWeightColumn) {
  MlpConfig c = MlpConfig::for_classes(10);
  c.hidden_dims = {};
  c.dropout_rates = {};
  const Model m = init_model(c, 2);
  const auto f = random_features(2);
  for (const std::size_t t : {0u, 7u}) {
    const SaliencyMaps s = saliency_for_class(m, f, t);
    for (std::size_t i = 0; i < kImagePixels; ++i) {
      ASSERT_FLOAT_EQ(s.gx.data()[i], m.layers[0].weights(i, t));
      ASSERT_FLOAT_EQ(s.gy.data()[i], m.layers[0].weights(kImagePixels + i, t));
    }
  }
}

TEST(Saliency, PredictedClassIsArgmax) {
  const Model m = warmed_model();
  const auto f = random_features(3);
  const Matrix logits = forward_eval(m, Matrix(1, kFeatureDim, f));
  EXPECT_EQ(saliency(m, f).predicted_class, argmax<float>(logits.row(0)));
}

TEST(Saliency, MatchesFiniteDifferences) {
  const Model m = warmed_model();
  const auto m64 = cast_model<double>(m);
  const auto f = random_features(4);
  const SaliencyMaps s = saliency(m, f);
  std::vector<double> x(f.begin(), f.end());
  const auto logit = [&] {
    return forward_eval(m64, BasicMatrix<double>(1, kFeatureDim, x))(0, s.predicted_class);
  };
  std::mt19937_64 gen(7);
  for (int k = 0; k < 20; ++k) {
    const std::size_t i = gen() % kFeatureDim;
    const double saved = x[i];
    x[i] = saved + 1e-5;
    const double up = logit();
    x[i] = saved - 1e-5;
    const double down = logit();
    x[i] = saved;
    const double got = i < kImagePixels ? s.gx.data()[i] : s.gy.data()[i - kImagePixels];
    EXPECT_LT(oracle::rel_err(got, (up - down) / 2e-5, 1e-3), 1e-3) << "input " << i;
  }
}

TEST(Saliency, FirstLayerEnergy) {
  Model m = make_model<float>(MlpConfig::for_classes(10));
  m.layers[0].weights(0, 0) = 3.0f;
  m.layers[0].weights(0, 5) = 4.0f;
  m.layers[0].weights(kImagePixels + 29, 1) = -2.0f;
  const SaliencyMaps e = first_layer_energy(m);
  EXPECT_FLOAT_EQ(e.gx(0, 0), 5.0f);
  EXPECT_FLOAT_EQ(e.gy(1, 1), 2.0f);
  EXPECT_FLOAT_EQ(e.gx(1, 1), 0.0f);
}

TEST(Saliency, Errors) {
  const Model m = make_model<float>(MlpConfig::for_classes(10));
  EXPECT_EQ(code_of([&] { saliency(m, std::vector<float>(10)); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { saliency_for_class(m, random_features(1), 10); }), ErrorCode::LabelOutOfRange);
  EXPECT_EQ(code_of([] { unflatten_channels(std::vector<float>(784)); }), ErrorCode::ShapeMismatch);
}

TEST(Attribution, ScalesAbsoluteValues) {
  const GrayImage img = attribution_image(Matrix(1, 4, {-2.0f, 1.0f, 0.0f, 0.5f}));
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{255, 128, 0, 64}));
  const GrayImage zero = attribution_image(Matrix(2, 2));
  EXPECT_EQ(zero.pixels, std::vector<std::uint8_t>(4, 0));
}
