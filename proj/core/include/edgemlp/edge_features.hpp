#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgemlp/dataset.hpp"
#include "edgemlp/tensor.hpp"

namespace edgemlp {

inline constexpr std::size_t kFeatureDim = 2 * kImagePixels;  // 1568
inline constexpr float kMinMaxEpsilon = 1e-8f;

/// Signed Sobel derivatives. For inputs in [0, 1] every entry lies in [-4, 4].
struct GradientPair {
  Matrix gx;
  Matrix gy;
};

struct NormalizedEdgeMap {
  Matrix gx_hat;
  Matrix gy_hat;
};

struct EdgeDiagnostics {
  Matrix magnitude;
  Matrix orientation;  // radians in (-pi, pi]; 0 where both derivatives are 0
};

/// Cross-correlation with
///   Gx = [-1 0 1; -2 0 2; -1 0 1],  Gy = [-1 -2 -1; 0 0 0; 1 2 1]
/// so brighter-to-the-right gives gx > 0 and brighter-below gives gy > 0.
/// Borders use reflect-101 padding (the edge pixel is not repeated).
/// Accepts any image of at least 2x2; raises NonFiniteInput on NaN/Inf.
GradientPair sobel_derivatives(const Matrix& image);

/// (v - min) / (max - min + epsilon), with min/max over this channel only.
Matrix minmax_normalize(const Matrix& channel, float epsilon = kMinMaxEpsilon);

NormalizedEdgeMap normalize(const GradientPair& pair, float epsilon = kMinMaxEpsilon);

EdgeDiagnostics gradient_diagnostics(const GradientPair& pair);

/// Pixels / 255 as a 28x28 float image.
Matrix to_unit_image(std::span<const std::uint8_t> pixels);

/// 1568 values: row-major gx_hat followed by row-major gy_hat.
std::vector<float> featurize(const Matrix& image);

/// Allocation-light variant used by the batch path.
void featurize_into(std::span<const std::uint8_t> pixels, std::span<float> out);

/// Row i of `features` is featurize(image_i / 255).
struct FeatureSet {
  Matrix features;  // N x 1568
  std::vector<std::uint8_t> labels;
  int class_count = 0;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
};

/// Images are processed in parallel over disjoint row ranges; the result does
/// not depend on the thread count.
FeatureSet featurize_batch(const LabeledImageSet& set, int threads = thread_count());

FeatureSet select(const FeatureSet& set, std::span<const std::size_t> indices);

}  // namespace edgemlp
