#include "edgemlp/edge_features.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>
#include <thread>

#include "edgemlp/error.hpp"

namespace edgemlp {

namespace {

std::ptrdiff_t reflect101(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

// Non-zero kernel taps in row-major kernel order. Accumulating in this order
// reproduces a plain 3x3 loop bit-for-bit, since the skipped taps add +/-0.
struct Tap {
  int dr;
  int dc;
  float w;
};
constexpr Tap kGxTaps[] = {{-1, -1, -1.f}, {-1, 1, 1.f}, {0, -1, -2.f}, {0, 1, 2.f}, {1, -1, -1.f}, {1, 1, 1.f}};
constexpr Tap kGyTaps[] = {{-1, -1, -1.f}, {-1, 0, -2.f}, {-1, 1, -1.f}, {1, -1, 1.f}, {1, 0, 2.f}, {1, 1, 1.f}};

// Works on a raw row-major buffer so the batch path can skip Matrix allocs.
void sobel_raw(const float* img, std::size_t rows, std::size_t cols, float* gx, float* gy) {
  const auto R = static_cast<std::ptrdiff_t>(rows);
  const auto C = static_cast<std::ptrdiff_t>(cols);
  for (std::ptrdiff_t r = 0; r < R; ++r) {
    for (std::ptrdiff_t c = 0; c < C; ++c) {
      float ax = 0.0f;
      for (const Tap& t : kGxTaps) {
        ax += t.w * img[reflect101(r + t.dr, R) * C + reflect101(c + t.dc, C)];
      }
      float ay = 0.0f;
      for (const Tap& t : kGyTaps) {
        ay += t.w * img[reflect101(r + t.dr, R) * C + reflect101(c + t.dc, C)];
      }
      gx[r * C + c] = ax;
      gy[r * C + c] = ay;
    }
  }
}

void minmax_raw(const float* in, std::size_t n, float epsilon, float* out) {
  const auto [lo, hi] = std::minmax_element(in, in + n);
  const float mn = *lo;
  const float denom = (*hi - mn) + epsilon;
  for (std::size_t i = 0; i < n; ++i) out[i] = (in[i] - mn) / denom;
}

}  // namespace

GradientPair sobel_derivatives(const Matrix& image) {
  if (image.rows() < 2 || image.cols() < 2) {
    fail(ErrorCode::ShapeMismatch, "Sobel needs at least a 2x2 image, got " + std::to_string(image.rows()) + "x" +
                                       std::to_string(image.cols()));
  }
  for (std::size_t i = 0; i < image.size(); ++i) {
    if (!std::isfinite(image.data()[i])) {
      fail(ErrorCode::NonFiniteInput, "pixel " + std::to_string(i) + " is not finite");
    }
  }
  GradientPair pair{Matrix(image.rows(), image.cols()), Matrix(image.rows(), image.cols())};
  sobel_raw(image.data().data(), image.rows(), image.cols(), pair.gx.data().data(), pair.gy.data().data());
  return pair;
}

Matrix minmax_normalize(const Matrix& channel, float epsilon) {
  Matrix out(channel.rows(), channel.cols());
  if (!channel.empty()) minmax_raw(channel.data().data(), channel.size(), epsilon, out.data().data());
  return out;
}

NormalizedEdgeMap normalize(const GradientPair& pair, float epsilon) {
  return {minmax_normalize(pair.gx, epsilon), minmax_normalize(pair.gy, epsilon)};
}

EdgeDiagnostics gradient_diagnostics(const GradientPair& pair) {
  if (pair.gx.rows() != pair.gy.rows() || pair.gx.cols() != pair.gy.cols()) {
    fail(ErrorCode::ShapeMismatch, "gradient channels differ in shape");
  }
  EdgeDiagnostics d{Matrix(pair.gx.rows(), pair.gx.cols()), Matrix(pair.gx.rows(), pair.gx.cols())};
  for (std::size_t i = 0; i < pair.gx.size(); ++i) {
    const float x = pair.gx.data()[i];
    const float y = pair.gy.data()[i];
    d.magnitude.data()[i] = std::sqrt(x * x + y * y);
    float theta = (x == 0.0f && y == 0.0f) ? 0.0f : std::atan2(y, x);
    // atan2 yields -pi for y = -0 or a tiny negative y with x < 0; keep (-pi, pi].
    if (theta <= -std::numbers::pi_v<float>) theta = std::numbers::pi_v<float>;
    d.orientation.data()[i] = theta;
  }
  return d;
}

Matrix to_unit_image(std::span<const std::uint8_t> pixels) {
  if (pixels.size() != kImagePixels) {
    fail(ErrorCode::BadImageShape, "expected 784 pixels, got " + std::to_string(pixels.size()));
  }
  Matrix img(kImageSide, kImageSide);
  for (std::size_t i = 0; i < kImagePixels; ++i) img.data()[i] = static_cast<float>(pixels[i]) / 255.0f;
  return img;
}

std::vector<float> featurize(const Matrix& image) {
  if (image.rows() != kImageSide || image.cols() != kImageSide) {
    fail(ErrorCode::BadImageShape, "featurize expects a 28x28 image, got " + std::to_string(image.rows()) + "x" +
                                       std::to_string(image.cols()));
  }
  const GradientPair pair = sobel_derivatives(image);
  std::vector<float> out(kFeatureDim);
  minmax_raw(pair.gx.data().data(), kImagePixels, kMinMaxEpsilon, out.data());
  minmax_raw(pair.gy.data().data(), kImagePixels, kMinMaxEpsilon, out.data() + kImagePixels);
  return out;
}

void featurize_into(std::span<const std::uint8_t> pixels, std::span<float> out) {
  if (pixels.size() != kImagePixels) {
    fail(ErrorCode::BadImageShape, "expected 784 pixels, got " + std::to_string(pixels.size()));
  }
  if (out.size() != kFeatureDim) fail(ErrorCode::ShapeMismatch, "feature output must hold 1568 values");
  float img[kImagePixels];
  float gx[kImagePixels];
  float gy[kImagePixels];
  for (std::size_t i = 0; i < kImagePixels; ++i) img[i] = static_cast<float>(pixels[i]) / 255.0f;
  sobel_raw(img, kImageSide, kImageSide, gx, gy);
  minmax_raw(gx, kImagePixels, kMinMaxEpsilon, out.data());
  minmax_raw(gy, kImagePixels, kMinMaxEpsilon, out.data() + kImagePixels);
}

FeatureSet featurize_batch(const LabeledImageSet& set, int threads) {
  validate(set);
  FeatureSet out{Matrix(set.size(), kFeatureDim), set.labels, set.class_count};
  const std::size_t n = set.size();
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                      std::max<std::size_t>(n, 1));

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        featurize_into(set.image(i), out.features.row(i));
      } catch (const Error& e) {
        throw Error(e.code(), "image " + std::to_string(i) + ": " + e.message());
      }
    }
  };

  if (workers == 1) {
    run(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        run(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

FeatureSet select(const FeatureSet& set, std::span<const std::size_t> indices) {
  FeatureSet out{Matrix(indices.size(), set.features.cols()), {}, set.class_count};
  out.labels.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= set.size()) fail(ErrorCode::ShapeMismatch, "index " + std::to_string(i) + " out of range");
    const auto src = set.features.row(i);
    std::copy(src.begin(), src.end(), out.features.row(k).begin());
    out.labels.push_back(set.labels[i]);
  }
  return out;
}

}  // namespace edgemlp
