#include "edgemlp/pipeline.hpp"

#include "edgemlp/error.hpp"

namespace edgemlp {

namespace {

void require_rows(const FeatureSet& all) {
  if (all.size() == 0) fail(ErrorCode::EmptyInput, "feature set holds no samples");
  if (all.features.rows() != all.size()) fail(ErrorCode::ShapeMismatch, "feature rows and labels differ");
}

}  // namespace

DataSplits split_features(const FeatureSet& all, const SplitSpec& spec) {
  require_rows(all);
  const IndexSplit tt = stratified_split_indices(all.labels, all.class_count, spec);
  const IndexSplit fv = validation_indices(tt.first.size(), spec);
  std::vector<std::size_t> fit_rows;
  std::vector<std::size_t> val_rows;
  fit_rows.reserve(fv.first.size());
  val_rows.reserve(fv.second.size());
  for (const std::size_t p : fv.first) fit_rows.push_back(tt.first[p]);
  for (const std::size_t p : fv.second) val_rows.push_back(tt.first[p]);
  return {select(all, fit_rows), select(all, val_rows), select(all, tt.second)};
}

FeatureSet test_split(const FeatureSet& all, const SplitSpec& spec) {
  require_rows(all);
  return select(all, stratified_split_indices(all.labels, all.class_count, spec).second);
}

FeatureSet subset_features(const FeatureSet& all, std::size_t n, std::uint64_t seed) {
  if (n >= all.size()) return all;
  return select(all, stratified_subset_indices(all.labels, all.class_count, n, seed));
}

std::string dataset_for_classes(int class_count) {
  if (class_count == 10) return std::string(dataset_name(DatasetKind::Mnist));
  if (class_count == 26) return std::string(dataset_name(DatasetKind::EmnistLetters));
  return "custom";
}

RunResult run_experiment(const FeatureSet& all, const TrainConfig& config, const EpochCallback& on_epoch) {
  SplitSpec spec;
  spec.seed = config.seed;
  const DataSplits splits = split_features(all, spec);
  RunResult result;
  result.model = init_model(MlpConfig::for_classes(static_cast<std::size_t>(all.class_count)), config.seed);
  result.history = train(result.model, splits.fit, splits.val, config, on_epoch);
  result.test = evaluate(result.model, splits.test, config.eval_chunk);
  return result;
}

}  // namespace edgemlp
