#pragma once

#include <cstddef>
#include <span>

#include "edgemlp/mlp.hpp"

namespace edgemlp {

/// Attribution over the two normalized edge channels, unflattened to 28x28.
struct SaliencyMaps {
  Matrix gx;
  Matrix gy;
  std::size_t predicted_class = 0;
};

/// Gradient of the predicted class's logit with respect to the 1568 inputs,
/// taken through the eval-mode network (no dropout, BatchNorm on moving
/// statistics).
SaliencyMaps saliency(const Model& model, std::span<const float> features);

/// Same, for an explicitly chosen class.
SaliencyMaps saliency_for_class(const Model& model, std::span<const float> features, std::size_t target);

/// Static map: L2 norm of each input's row of first-layer weights.
SaliencyMaps first_layer_energy(const Model& model);

/// Splits a flat 1568 vector into its two row-major 28x28 channels.
SaliencyMaps unflatten_channels(std::span<const float> flat);

}  // namespace edgemlp
