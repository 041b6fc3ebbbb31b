#include "edgemlp/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "edgemlp/error.hpp"
#include "edgemlp/metrics.hpp"
#include "edgemlp/rng.hpp"

namespace edgemlp {

namespace {

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), src.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto s = src.row(rows[k]);
    std::copy(s.begin(), s.end(), out.row(k).begin());
  }
  return out;
}

std::string where(int epoch, std::size_t batch) {
  return "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch);
}

}  // namespace

void validate(const TrainConfig& config) {
  if (config.batch_size < 2) fail(ErrorCode::InvalidParameter, "batch size must be at least 2 for BatchNorm");
  if (config.max_epochs < 1) fail(ErrorCode::InvalidParameter, "max_epochs must be at least 1");
  if (!(config.learning_rate > 0.0f)) fail(ErrorCode::InvalidParameter, "learning rate must be positive");
  if (config.early_stopping_patience < 1 || config.plateau.patience < 1) {
    fail(ErrorCode::InvalidParameter, "callback patience must be at least 1");
  }
}

std::vector<std::size_t> batch_boundaries(std::size_t n, std::size_t batch_size) {
  std::vector<std::size_t> bounds{0};
  for (std::size_t b = batch_size; b < n; b += batch_size) bounds.push_back(b);
  bounds.push_back(n);
  if (bounds.size() > 2 && n - bounds[bounds.size() - 2] == 1) bounds.erase(bounds.end() - 2);
  return bounds;
}

TrainHistory train(Model& model, const FeatureSet& fit, const FeatureSet& val, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  validate(config);
  model.check_shapes();
  if (fit.features.rows() != fit.labels.size() || val.features.rows() != val.labels.size()) {
    fail(ErrorCode::ShapeMismatch, "feature rows and labels differ");
  }
  if (fit.features.cols() != model.config.input_dim || val.features.cols() != model.config.input_dim) {
    fail(ErrorCode::ShapeMismatch, "feature width does not match the model input");
  }
  if (fit.class_count != static_cast<int>(model.config.output_dim)) {
    fail(ErrorCode::ClassCountMismatch, "data has " + std::to_string(fit.class_count) + " classes, model " +
                                            std::to_string(model.config.output_dim));
  }
  if (fit.size() < 2) fail(ErrorCode::BatchTooSmall, "need at least 2 training samples");
  if (val.size() == 0) fail(ErrorCode::EmptyInput, "validation set is empty");

  Rng rng(config.seed, rng_stream::kTraining);
  AdamState adam;
  adam.lr = config.learning_rate;
  PlateauScheduler plateau(config.plateau);
  EarlyStopping early(config.early_stopping_patience);
  TrainHistory history;

  std::vector<std::size_t> order(fit.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bounds = batch_boundaries(fit.size(), config.batch_size);

  ForwardCache cache;
  std::vector<std::uint8_t> batch_labels;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
      const std::span<const std::size_t> rows(order.data() + bounds[b], bounds[b + 1] - bounds[b]);
      try {
        const Matrix x = gather_rows(fit.features, rows);
        batch_labels.resize(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) batch_labels[k] = fit.labels[rows[k]];

        const Matrix logits = forward_train(model, x, rng, cache);
        const auto loss = loss_softmax_xent(logits, batch_labels);
        if (!std::isfinite(loss.loss)) fail(ErrorCode::DomainError, "non-finite training loss");
        const auto grads = backward(model, cache, loss.dlogits);
        const auto tensors = grads.tensors();
        const auto params = model.parameters();
        adam_step(params, tensors, adam);

        loss_sum += static_cast<double>(loss.loss) * static_cast<double>(rows.size());
        const auto preds = argmax(Axis::Across, logits);
        for (std::size_t k = 0; k < rows.size(); ++k) correct += preds[k] == batch_labels[k] ? 1 : 0;
      } catch (const Error& e) {
        throw Error(e.code(), where(epoch, b) + ": " + e.message());
      }
    }

    const Evaluation v = evaluate(model, val, config.eval_chunk);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(fit.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(fit.size());
    rec.val_loss = v.loss;
    rec.val_accuracy = v.accuracy;
    rec.lr = adam.lr;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!std::isfinite(rec.val_loss)) fail(ErrorCode::DomainError, "non-finite validation loss at epoch " + std::to_string(epoch));

    adam.lr = plateau.update(epoch, rec.val_loss, adam.lr);
    const Decision decision = early.update(epoch, rec.val_accuracy, model);

    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (decision == Decision::Stop) {
      history.stopped_early = true;
      break;
    }
  }

  history.best_epoch = early.best_epoch();
  if (early.best_weights()) model = *early.best_weights();
  return history;
}

std::string epoch_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["train_accuracy"] = r.train_accuracy;
  j["val_loss"] = r.val_loss;
  j["val_accuracy"] = r.val_accuracy;
  j["lr"] = r.lr;
  j["seconds"] = r.seconds;
  return j.dump();
}

std::string history_header_json(const TrainConfig& config, const MlpConfig& model, const std::string& dataset) {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["seed"] = config.seed;
  j["batch_size"] = config.batch_size;
  j["max_epochs"] = config.max_epochs;
  j["lr"] = config.learning_rate;
  j["early_stopping_patience"] = config.early_stopping_patience;
  j["plateau_factor"] = config.plateau.factor;
  j["plateau_patience"] = config.plateau.patience;
  j["plateau_min_lr"] = config.plateau.min_lr;
  j["plateau_min_delta"] = config.plateau.min_delta;
  j["hidden_dims"] = model.hidden_dims;
  j["dropout_rates"] = model.dropout_rates;
  j["output_dim"] = model.output_dim;
  j["param_count"] = param_count(model);
  nlohmann::ordered_json line;
  line["header"] = j;
  return line.dump();
}

}  // namespace edgemlp
