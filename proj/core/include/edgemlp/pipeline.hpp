#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "edgemlp/dataset.hpp"
#include "edgemlp/edge_features.hpp"
#include "edgemlp/metrics.hpp"
#include "edgemlp/mlp.hpp"
#include "edgemlp/train.hpp"

namespace edgemlp {

// fit + val + test partition every row of the source exactly once.
struct DataSplits {
  FeatureSet fit;
  FeatureSet val;
  FeatureSet test;
};

/// Stratified 80/20 train/test, then the validation carve out of train.
DataSplits split_features(const FeatureSet& all, const SplitSpec& spec);

/// Only the test side; what `eval` recomputes from a stored seed.
FeatureSet test_split(const FeatureSet& all, const SplitSpec& spec);

/// Stratified reduced-size sample (fast mode). n >= N returns `all` unchanged.
FeatureSet subset_features(const FeatureSet& all, std::size_t n, std::uint64_t seed);

/// "mnist" for 10 classes, "emnist_letters" for 26, else "custom".
std::string dataset_for_classes(int class_count);

struct RunResult {
  Model model;
  TrainHistory history;
  Evaluation test;
};

/// split -> carve -> init -> train -> test evaluation, all keyed on config.seed.
RunResult run_experiment(const FeatureSet& all, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace edgemlp
