#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "edgemlp/edge_features.hpp"
#include "edgemlp/mlp.hpp"
#include "edgemlp/optimizer.hpp"

namespace edgemlp {

struct TrainConfig {
  std::size_t batch_size = 128;
  int max_epochs = 50;
  std::uint64_t seed = 0;
  float learning_rate = 1e-3f;
  int early_stopping_patience = 4;
  PlateauScheduler::Options plateau{};
  std::size_t eval_chunk = 1000;
};

void validate(const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;  // from the train-mode (dropout) forward passes
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  float lr = 0.0f;  // learning rate in effect during this epoch
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch boundaries for one epoch over n samples: consecutive batches of
/// batch_size, the short tail kept, and a tail of exactly one sample merged
/// into the previous batch so every batch has at least 2 rows.
std::vector<std::size_t> batch_boundaries(std::size_t n, std::size_t batch_size);

/// Trains `model` in place. Each epoch: seeded reshuffle of the fit rows,
/// forward/loss/backward/Adam per mini-batch, an eval-mode pass over `val`,
/// then the plateau scheduler and the early-stopping check, in that order.
/// On return the model holds the weights of the best validation epoch.
/// `on_epoch` fires after each epoch completes.
TrainHistory train(Model& model, const FeatureSet& fit, const FeatureSet& val, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

/// One JSON object, no trailing newline. `seconds` is the only field that
/// varies between otherwise identical runs.
std::string epoch_json(const EpochRecord& record);

/// Header line echoing every overridable hyperparameter.
std::string history_header_json(const TrainConfig& config, const MlpConfig& model, const std::string& dataset);

}  // namespace edgemlp
