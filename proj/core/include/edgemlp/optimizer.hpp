#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "edgemlp/mlp.hpp"

namespace edgemlp {

/// Adam with the usual framework defaults.
struct AdamState {
  std::uint64_t step = 0;
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-7f;
  std::vector<std::vector<float>> m;  // one per parameter tensor
  std::vector<std::vector<float>> v;
};

/// t <- t + 1; m <- b1 m + (1 - b1) g; v <- b2 v + (1 - b2) g^2;
/// p <- p - lr * m_hat / (sqrt(v_hat) + eps) with the bias-corrected moments.
/// Moment buffers are allocated on the first call; later calls must present
/// the same tensor shapes (ShapeMismatch otherwise).
void adam_step(std::span<const std::span<float>> params, std::span<const std::span<const float>> grads,
               AdamState& state);

enum class Decision { Continue, Stop };

/// Early stopping on validation accuracy with best-weight restoration.
/// Improvement means strictly greater than the best so far (min_delta 0).
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience = 4) : patience_(patience) {}

  /// Epochs are 1-based and must arrive in order (OutOfOrderEpoch).
  /// Snapshots `weights` on improvement.
  Decision update(int epoch, double val_accuracy, const Model& weights);

  [[nodiscard]] int best_epoch() const noexcept { return best_epoch_; }
  [[nodiscard]] double best_value() const noexcept { return best_; }
  [[nodiscard]] int epochs_since_improvement() const noexcept { return wait_; }
  [[nodiscard]] int patience() const noexcept { return patience_; }
  /// The weights recorded at best_epoch(), if any epoch has completed.
  [[nodiscard]] const std::optional<Model>& best_weights() const noexcept { return best_weights_; }

 private:
  int patience_;
  int last_epoch_ = 0;
  int best_epoch_ = 0;
  int wait_ = 0;
  double best_ = -std::numeric_limits<double>::infinity();
  std::optional<Model> best_weights_;
};

/// Halves the learning rate after `patience` epochs without validation-loss
/// improvement beyond min_delta, never below min_lr. The counter resets after
/// every reduction. No cooldown.
class PlateauScheduler {
 public:
  struct Options {
    float factor = 0.5f;
    int patience = 3;
    float min_lr = 1e-6f;
    double min_delta = 1e-4;
  };

  PlateauScheduler() : PlateauScheduler(Options{}) {}
  explicit PlateauScheduler(Options options) : options_(options) {}

  /// Returns the learning rate for the next epoch.
  float update(int epoch, double val_loss, float current_lr);

  [[nodiscard]] double best_value() const noexcept { return best_; }
  [[nodiscard]] int epochs_since_improvement() const noexcept { return wait_; }
  [[nodiscard]] const Options& options() const noexcept { return options_; }

 private:
  Options options_;
  int last_epoch_ = 0;
  int wait_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

}  // namespace edgemlp
