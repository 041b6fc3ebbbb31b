#include "edgemlp/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "edgemlp/dataset.hpp"
#include "edgemlp/error.hpp"

namespace edgemlp {

namespace {

Matrix rows_of(const Matrix& m, std::size_t begin, std::size_t end) {
  std::vector<float> buf(m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
                         m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols()));
  return Matrix(end - begin, m.cols(), std::move(buf));
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(int classes)
    : classes_(classes), counts_(static_cast<std::size_t>(classes) * static_cast<std::size_t>(classes), 0) {}

void ConfusionMatrix::add(int true_class, int predicted) {
  if (true_class < 0 || true_class >= classes_ || predicted < 0 || predicted >= classes_) {
    fail(ErrorCode::LabelOutOfRange, "confusion cell (" + std::to_string(true_class) + ", " +
                                         std::to_string(predicted) + ")");
  }
  ++counts_[static_cast<std::size_t>(true_class * classes_ + predicted)];
}

std::uint64_t ConfusionMatrix::at(int true_class, int predicted) const {
  return counts_.at(static_cast<std::size_t>(true_class * classes_ + predicted));
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (const auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (int i = 0; i < classes_; ++i) t += counts_[static_cast<std::size_t>(i * classes_ + i)];
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int true_class) const {
  std::uint64_t t = 0;
  for (int p = 0; p < classes_; ++p) t += at(true_class, p);
  return t;
}

Matrix predict_logits(const Model& model, const Matrix& features, std::size_t chunk) {
  if (features.cols() != model.config.input_dim) {
    fail(ErrorCode::ShapeMismatch, "features have " + std::to_string(features.cols()) + " columns, model expects " +
                                       std::to_string(model.config.input_dim));
  }
  chunk = std::max<std::size_t>(chunk, 1);
  Matrix logits(features.rows(), model.config.output_dim);
  for (std::size_t begin = 0; begin < features.rows(); begin += chunk) {
    const std::size_t end = std::min(features.rows(), begin + chunk);
    const Matrix part = forward_eval(model, rows_of(features, begin, end));
    std::copy(part.data().begin(), part.data().end(),
              logits.data().begin() + static_cast<std::ptrdiff_t>(begin * logits.cols()));
  }
  return logits;
}

std::vector<std::size_t> predict(const Model& model, const Matrix& features, std::size_t chunk) {
  return argmax(Axis::Across, predict_logits(model, features, chunk));
}

ConfusionMatrix confusion_from(std::span<const std::size_t> predictions, std::span<const std::uint8_t> labels,
                               int classes) {
  if (predictions.size() != labels.size()) fail(ErrorCode::ShapeMismatch, "prediction and label counts differ");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], static_cast<int>(predictions[i]));
  return cm;
}

Evaluation evaluate(const Model& model, const Matrix& features, std::span<const std::uint8_t> labels,
                    std::size_t chunk) {
  if (features.rows() != labels.size()) {
    fail(ErrorCode::ShapeMismatch, std::to_string(features.rows()) + " feature rows for " +
                                       std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) fail(ErrorCode::EmptyInput, "cannot evaluate on an empty set");
  const Matrix logits = predict_logits(model, features, chunk);
  const auto preds = argmax(Axis::Across, logits);

  Evaluation ev;
  ev.confusion = confusion_from(preds, labels, static_cast<int>(model.config.output_dim));
  ev.accuracy = static_cast<double>(ev.confusion.trace()) / static_cast<double>(labels.size());

  // Loss in fixed chunks so the value does not depend on the caller.
  double weighted = 0.0;
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t begin = 0; begin < logits.rows(); begin += chunk) {
    const std::size_t end = std::min(logits.rows(), begin + chunk);
    const auto part = loss_softmax_xent(rows_of(logits, begin, end), labels.subspan(begin, end - begin));
    weighted += static_cast<double>(part.loss) * static_cast<double>(end - begin);
  }
  ev.loss = weighted / static_cast<double>(labels.size());
  return ev;
}

Evaluation evaluate(const Model& model, const FeatureSet& set, std::size_t chunk) {
  return evaluate(model, set.features, set.labels, chunk);
}

std::vector<ConfusionCell> top_confusions(const ConfusionMatrix& cm, std::size_t k) {
  std::vector<ConfusionCell> cells;
  for (int t = 0; t < cm.classes(); ++t) {
    for (int p = 0; p < cm.classes(); ++p) {
      if (t != p && cm.at(t, p) > 0) cells.push_back({t, p, cm.at(t, p)});
    }
  }
  std::stable_sort(cells.begin(), cells.end(), [](const ConfusionCell& a, const ConfusionCell& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.true_class != b.true_class) return a.true_class < b.true_class;
    return a.predicted < b.predicted;
  });
  if (cells.size() > k) cells.resize(k);
  return cells;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream out;
  out << "true\\pred";
  for (int p = 0; p < cm.classes(); ++p) out << ',' << class_label(cm.classes(), p);
  out << '\n';
  for (int t = 0; t < cm.classes(); ++t) {
    out << class_label(cm.classes(), t);
    for (int p = 0; p < cm.classes(); ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
  return out.str();
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << confusion_csv(cm);
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace edgemlp
