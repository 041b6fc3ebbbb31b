#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgemlp/edge_features.hpp"
#include "edgemlp/mlp.hpp"

namespace edgemlp {

/// Row = true class, column = predicted class.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes = 0);

  void add(int true_class, int predicted);

  [[nodiscard]] int classes() const noexcept { return classes_; }
  [[nodiscard]] std::uint64_t at(int true_class, int predicted) const;
  [[nodiscard]] std::uint64_t total() const noexcept;
  [[nodiscard]] std::uint64_t trace() const noexcept;
  [[nodiscard]] std::uint64_t row_sum(int true_class) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int classes_;
  std::vector<std::uint64_t> counts_;
};

struct Evaluation {
  double accuracy = 0.0;  // trace / N
  double loss = 0.0;      // mean cross-entropy
  ConfusionMatrix confusion;
};

/// Eval-mode logits for every row, computed in fixed-size chunks.
Matrix predict_logits(const Model& model, const Matrix& features, std::size_t chunk = 1000);

/// Argmax predictions, lowest index on ties.
std::vector<std::size_t> predict(const Model& model, const Matrix& features, std::size_t chunk = 1000);

/// Top-1 accuracy, loss and confusion matrix. Raises ShapeMismatch when the
/// model and data disagree and EmptyInput on an empty set.
Evaluation evaluate(const Model& model, const Matrix& features, std::span<const std::uint8_t> labels,
                    std::size_t chunk = 1000);
Evaluation evaluate(const Model& model, const FeatureSet& set, std::size_t chunk = 1000);

ConfusionMatrix confusion_from(std::span<const std::size_t> predictions, std::span<const std::uint8_t> labels,
                               int classes);

struct ConfusionCell {
  int true_class;
  int predicted;
  std::uint64_t count;

  friend bool operator==(const ConfusionCell&, const ConfusionCell&) = default;
};

/// The k largest off-diagonal cells, count descending, then (true, predicted)
/// ascending. Zero cells are never reported.
std::vector<ConfusionCell> top_confusions(const ConfusionMatrix& cm, std::size_t k);

/// CSV with a header row and a leading column of class labels.
std::string confusion_csv(const ConfusionMatrix& cm);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);

}  // namespace edgemlp
