#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "edgemlp/rng.hpp"
#include "edgemlp/tensor.hpp"

namespace edgemlp {

/// Layer widths and regularization of the classifier. Each hidden layer is
/// Dense -> BatchNorm -> ReLU -> Dropout(rate); the output layer is Dense
/// only, with softmax folded into the loss.
struct MlpConfig {
  std::size_t input_dim = 1568;
  std::vector<std::size_t> hidden_dims{1024, 512, 256};
  std::vector<float> dropout_rates{0.5f, 0.4f, 0.3f};
  std::size_t output_dim = 10;
  float bn_epsilon = 1e-3f;
  float bn_momentum = 0.99f;

  /// Default architecture with the given number of output classes.
  static MlpConfig for_classes(std::size_t output_dim);

  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// Raises InvalidParameter on zero widths, mismatched dropout list, or rates
/// outside [0, 1).
void validate(const MlpConfig& config);

/// Dense weights + biases for every layer, plus BatchNorm gamma/beta on
/// hidden layers.
std::size_t param_count(const MlpConfig& config);

/// BatchNorm moving mean and variance: 2 values per hidden unit.
std::size_t moving_stat_count(const MlpConfig& config);

template <typename T>
struct BasicLayer {
  BasicMatrix<T> weights;  // in x out
  std::vector<T> bias;
  // Hidden layers only; empty on the output layer.
  std::vector<T> gamma;
  std::vector<T> beta;
  std::vector<T> moving_mean;
  std::vector<T> moving_var;

  [[nodiscard]] bool has_batch_norm() const noexcept { return !gamma.empty(); }
  [[nodiscard]] std::size_t in_dim() const noexcept { return weights.rows(); }
  [[nodiscard]] std::size_t out_dim() const noexcept { return weights.cols(); }
};

template <typename T>
struct BasicModel {
  MlpConfig config;
  std::vector<BasicLayer<T>> layers;  // hidden layers, then the output layer

  /// Trainable tensors in a fixed order: per layer weights, bias, then
  /// gamma and beta when the layer has BatchNorm.
  std::vector<std::span<T>> parameters();
  std::vector<std::span<const T>> parameters() const;

  /// parameters() interleaved with moving statistics: per layer weights,
  /// bias, gamma, beta, moving_mean, moving_var. This is the file order.
  std::vector<std::span<const T>> stored_tensors() const;
  std::vector<std::span<T>> stored_tensors();

  /// Shape check against config; raises ShapeMismatch.
  void check_shapes() const;
};

using Layer = BasicLayer<float>;
using Model = BasicModel<float>;

/// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero biases
/// and beta, unit gamma, moving statistics (0, 1).
Model init_model(const MlpConfig& config, std::uint64_t seed);

/// All-zero model of the right shape (gamma 1, moving variance 1).
template <typename T>
BasicModel<T> make_model(const MlpConfig& config);

template <typename To, typename From>
BasicModel<To> cast_model(const BasicModel<From>& model) {
  BasicModel<To> out;
  out.config = model.config;
  const auto conv = [](const std::vector<From>& v) { return std::vector<To>(v.begin(), v.end()); };
  for (const auto& l : model.layers) {
    BasicLayer<To> nl;
    const auto w = l.weights.data();
    nl.weights = BasicMatrix<To>(l.weights.rows(), l.weights.cols(), std::vector<To>(w.begin(), w.end()));
    nl.bias = conv(l.bias);
    nl.gamma = conv(l.gamma);
    nl.beta = conv(l.beta);
    nl.moving_mean = conv(l.moving_mean);
    nl.moving_var = conv(l.moving_var);
    out.layers.push_back(std::move(nl));
  }
  return out;
}

enum class Mode { Train, Eval };

/// Everything backward() needs from one train-mode forward pass.
template <typename T>
struct BasicLayerCache {
  BasicMatrix<T> input;       // B x in
  BasicMatrix<T> normalized;  // B x out, BatchNorm x-hat
  std::vector<T> inv_std;     // 1 / sqrt(batch_var + eps)
  BasicMatrix<T> bn_output;   // B x out, gamma * x-hat + beta (pre-ReLU)
  BasicMatrix<T> dropout_scale;  // B x out, 0 or 1/(1-p); empty when dropout is off
};

template <typename T>
struct BasicForwardCache {
  std::vector<BasicLayerCache<T>> layers;
  std::size_t batch = 0;
};

using ForwardCache = BasicForwardCache<float>;

struct ForwardOptions {
  bool dropout = true;
  bool update_moving_stats = true;
};

/// Train-mode forward: batch statistics, dropout masks drawn from `rng`,
/// moving statistics updated as m <- momentum * m + (1 - momentum) * batch.
/// Needs at least 2 rows (BatchTooSmall).
template <typename T>
BasicMatrix<T> forward_train(BasicModel<T>& model, const BasicMatrix<T>& batch, Rng& rng,
                             BasicForwardCache<T>& cache, ForwardOptions options = {});

/// Eval-mode forward: moving statistics, no dropout, no mutation.
template <typename T>
BasicMatrix<T> forward_eval(const BasicModel<T>& model, const BasicMatrix<T>& batch);

template <typename T>
struct BasicForwardResult {
  BasicMatrix<T> logits;
  std::optional<BasicForwardCache<T>> cache;  // train mode only
};

/// Mode-dispatching entry point over forward_train / forward_eval.
template <typename T>
BasicForwardResult<T> forward(BasicModel<T>& model, const BasicMatrix<T>& batch, Mode mode, Rng& rng);

template <typename T>
struct BasicLossResult {
  T loss;
  BasicMatrix<T> dlogits;  // (softmax - onehot) / B
};

/// Mean sparse categorical cross-entropy over max-shifted logits.
template <typename T>
BasicLossResult<T> loss_softmax_xent(const BasicMatrix<T>& logits, std::span<const std::uint8_t> labels);

template <typename T>
BasicMatrix<T> softmax(const BasicMatrix<T>& logits);

template <typename T>
struct BasicLayerGrads {
  BasicMatrix<T> weights;
  std::vector<T> bias;
  std::vector<T> gamma;
  std::vector<T> beta;
};

template <typename T>
struct BasicGradients {
  std::vector<BasicLayerGrads<T>> layers;

  /// Same order as BasicModel::parameters().
  std::vector<std::span<const T>> tensors() const;
};

using Gradients = BasicGradients<float>;

/// Exact gradients of the loss whose dlogits are given, through the full
/// BatchNorm backward (batch mean and variance) and the stored dropout
/// masks. Raises StaleCache if the cache does not match the model.
template <typename T>
BasicGradients<T> backward(const BasicModel<T>& model, const BasicForwardCache<T>& cache,
                           const BasicMatrix<T>& dlogits);

/// d(sum(dlogits * logits)) / d(input) for an eval-mode forward: dropout off,
/// BatchNorm as the affine map given by the moving statistics.
template <typename T>
BasicMatrix<T> input_gradient_eval(const BasicModel<T>& model, const BasicMatrix<T>& input,
                                   const BasicMatrix<T>& dlogits);

}  // namespace edgemlp
