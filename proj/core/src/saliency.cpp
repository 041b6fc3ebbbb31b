#include "edgemlp/saliency.hpp"

#include <cmath>
#include <string>

#include "edgemlp/edge_features.hpp"
#include "edgemlp/error.hpp"

namespace edgemlp {

SaliencyMaps unflatten_channels(std::span<const float> flat) {
  if (flat.size() != kFeatureDim) {
    fail(ErrorCode::ShapeMismatch, "expected 1568 values, got " + std::to_string(flat.size()));
  }
  SaliencyMaps maps{Matrix(kImageSide, kImageSide), Matrix(kImageSide, kImageSide), 0};
  std::copy(flat.begin(), flat.begin() + kImagePixels, maps.gx.data().begin());
  std::copy(flat.begin() + kImagePixels, flat.end(), maps.gy.data().begin());
  return maps;
}

SaliencyMaps saliency_for_class(const Model& model, std::span<const float> features, std::size_t target) {
  if (features.size() != model.config.input_dim) {
    fail(ErrorCode::ShapeMismatch, "feature vector of " + std::to_string(features.size()) + " values");
  }
  if (target >= model.config.output_dim) fail(ErrorCode::LabelOutOfRange, "class " + std::to_string(target));
  const Matrix x(1, features.size(), std::vector<float>(features.begin(), features.end()));
  Matrix seed(1, model.config.output_dim);
  seed(0, target) = 1.0f;
  const Matrix grad = input_gradient_eval(model, x, seed);
  SaliencyMaps maps = unflatten_channels(grad.data());
  maps.predicted_class = target;
  return maps;
}

SaliencyMaps saliency(const Model& model, std::span<const float> features) {
  if (features.size() != model.config.input_dim) {
    fail(ErrorCode::ShapeMismatch, "feature vector of " + std::to_string(features.size()) + " values");
  }
  const Matrix x(1, features.size(), std::vector<float>(features.begin(), features.end()));
  const Matrix logits = forward_eval(model, x);
  return saliency_for_class(model, features, argmax<float>(logits.row(0)));
}

SaliencyMaps first_layer_energy(const Model& model) {
  const Matrix& w = model.layers.front().weights;
  std::vector<float> energy(w.rows());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double acc = 0.0;
    for (const float v : w.row(i)) acc += static_cast<double>(v) * v;
    energy[i] = static_cast<float>(std::sqrt(acc));
  }
  return unflatten_channels(energy);
}

}  // namespace edgemlp
