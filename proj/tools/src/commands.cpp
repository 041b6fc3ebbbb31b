#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "edgemlp/dataset.hpp"
#include "edgemlp/edge_features.hpp"
#include "edgemlp/feature_cache.hpp"
#include "edgemlp/image_io.hpp"
#include "edgemlp/metrics.hpp"
#include "edgemlp/model_store.hpp"
#include "edgemlp/pipeline.hpp"
#include "edgemlp/saliency.hpp"
#include "edgemlp/tensor.hpp"
#include "edgemlp/train.hpp"

namespace edgemlp::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string dataset;
  std::string data_dir;
  std::string cache;
  std::string model;
  std::string out;
  std::string image;
  std::uint64_t seed = 0;
  std::size_t batch_size = 128;
  int max_epochs = 50;
  float lr = 1e-3f;
  int threads = 1;
  std::size_t subset = 0;
};

fs::path data_dir(const Options& o) {
  if (!o.data_dir.empty()) return o.data_dir;
  if (const char* env = std::getenv("EDGEMLP_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

fs::path out_dir(const Options& o) { return o.out.empty() ? fs::path(".") : fs::path(o.out); }

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// --cache wins when the file exists; otherwise featurize from --dataset.
FeatureSet load_features(const Options& o, std::ostream& out) {
  if (!o.cache.empty() && (o.dataset.empty() || fs::exists(o.cache))) return read_feature_cache(o.cache);
  if (o.dataset.empty()) fail(ErrorCode::InvalidParameter, "need --cache or --dataset");
  const DatasetKind kind = parse_dataset_name(o.dataset);
  const LabeledImageSet images = load_dataset(kind, data_dir(o));
  out << "featurizing " << images.size() << " images\n";
  return featurize_batch(images, o.threads);
}

FeatureSet maybe_subset(FeatureSet all, const Options& o, std::ostream& out) {
  if (o.subset == 0 || o.subset >= all.size()) return all;
  FeatureSet sub = subset_features(all, o.subset, o.seed);
  out << "subset: " << sub.size() << " of " << all.size() << " samples\n";
  return sub;
}

void print_accuracy(std::ostream& out, const Evaluation& e) {
  out << "test_accuracy: " << fixed(e.accuracy, 6) << " (" << e.confusion.trace() << "/" << e.confusion.total()
      << ")\n";
}

int cmd_prepare(const Options& o, std::ostream& out) {
  if (o.dataset.empty() || o.cache.empty()) fail(ErrorCode::InvalidParameter, "prepare needs --dataset and --cache");
  const DatasetKind kind = parse_dataset_name(o.dataset);
  const LabeledImageSet images = load_dataset(kind, data_dir(o));
  const FeatureSet features = featurize_batch(images, o.threads);
  write_feature_cache(o.cache, features);
  out << "N=" << features.size() << " D=" << features.features.cols() << " class_count=" << features.class_count
      << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const FeatureSet all = maybe_subset(load_features(o, out), o, out);
  TrainConfig config;
  config.seed = o.seed;
  config.batch_size = o.batch_size;
  config.max_epochs = o.max_epochs;
  config.learning_rate = o.lr;
  validate(config);

  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  const fs::path model_path = o.model.empty() ? dir / "model.sgmlp" : fs::path(o.model);
  const std::string name = o.dataset.empty() ? dataset_for_classes(all.class_count) : o.dataset;

  std::ofstream history(dir / "history.jsonl", std::ios::binary | std::ios::trunc);
  if (!history) fail(ErrorCode::IoError, "cannot write " + (dir / "history.jsonl").string());
  history << history_header_json(config, MlpConfig::for_classes(static_cast<std::size_t>(all.class_count)), name)
          << "\n"
          << std::flush;

  const RunResult run = run_experiment(all, config, [&](const EpochRecord& r) {
    history << epoch_json(r) << "\n" << std::flush;
    out << "epoch " << r.epoch << ": loss " << fixed(r.train_loss, 4) << " acc " << fixed(r.train_accuracy, 4)
        << " val_loss " << fixed(r.val_loss, 4) << " val_acc " << fixed(r.val_accuracy, 4) << " lr " << r.lr << " ("
        << fixed(r.seconds, 1) << "s)\n"
        << std::flush;
  });

  ModelMetadata meta{name, o.seed, static_cast<int>(run.history.epochs.size())};
  save_model(model_path, run.model, meta);
  write_confusion_csv(dir / "confusion.csv", run.test.confusion);
  out << "best_epoch: " << run.history.best_epoch << (run.history.stopped_early ? " (early stop)" : "") << "\n";
  print_accuracy(out, run.test);
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if (o.model.empty()) fail(ErrorCode::InvalidParameter, "eval needs --model");
  const StoredModel stored = load_model(o.model);
  Options so = o;
  so.seed = stored.metadata.seed;
  const FeatureSet all = load_features(so, out);
  if (all.size() == 0) fail(ErrorCode::EmptyInput, "feature cache holds no samples");
  if (static_cast<std::size_t>(all.class_count) != stored.model.config.output_dim) {
    fail(ErrorCode::ClassCountMismatch, "model has " + std::to_string(stored.model.config.output_dim) +
                                            " classes, data has " + std::to_string(all.class_count));
  }
  SplitSpec spec;
  spec.seed = stored.metadata.seed;
  const FeatureSet test = test_split(maybe_subset(all, so, out), spec);
  const Evaluation e = evaluate(stored.model, test);
  print_accuracy(out, e);
  out << "test_loss: " << fixed(e.loss, 6) << "\n";
  if (o.out.empty()) {
    out << confusion_csv(e.confusion);
  } else {
    fs::create_directories(o.out);
    write_confusion_csv(fs::path(o.out) / "confusion.csv", e.confusion);
  }
  for (const auto& c : top_confusions(e.confusion, 5)) {
    out << "confused: " << class_label(e.confusion.classes(), c.true_class) << " -> "
        << class_label(e.confusion.classes(), c.predicted) << " x" << c.count << "\n";
  }
  return kOk;
}

std::vector<float> image_features(const std::string& path) {
  const GrayImage img = read_image(path);
  return featurize(to_unit_image(img.pixels));
}

int cmd_predict(const Options& o, std::ostream& out) {
  if (o.model.empty() || o.image.empty()) fail(ErrorCode::InvalidParameter, "predict needs --model and --image");
  const StoredModel stored = load_model(o.model);
  const std::vector<float> f = image_features(o.image);
  const Matrix logits = forward_eval(stored.model, Matrix(1, f.size(), f));

  // Softmax in double so the printed probabilities sum to 1 tightly.
  const auto row = logits.row(0);
  const std::size_t best = argmax(row);
  std::vector<double> p(row.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    p[k] = std::exp(static_cast<double>(row[k]) - static_cast<double>(row[best]));
    sum += p[k];
  }
  const int classes = static_cast<int>(row.size());
  out << "label: " << class_label(classes, static_cast<int>(best)) << "\n";
  for (std::size_t k = 0; k < p.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", p[k] / sum);
    out << class_label(classes, static_cast<int>(k)) << " " << buf << "\n";
  }
  return kOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  if (o.model.empty()) fail(ErrorCode::InvalidParameter, "inspect needs --model");
  const StoredModel stored = load_model(o.model);
  const Model& m = stored.model;
  out << "dataset: " << stored.metadata.dataset << "\n";
  out << "seed: " << stored.metadata.seed << "\n";
  out << "epochs: " << stored.metadata.epochs << "\n";
  out << "param_count: " << param_count(m.config) << "\n";
  out << "moving_stats: " << moving_stat_count(m.config) << "\n";
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& l = m.layers[i];
    out << "layer " << i << ": dense " << l.in_dim() << "x" << l.out_dim();
    if (l.has_batch_norm()) {
      out << " batchnorm relu dropout " << m.config.dropout_rates[i];
    } else {
      out << " logits";
    }
    out << "\n";
  }
  if (o.image.empty()) return kOk;

  const std::vector<float> f = image_features(o.image);
  const SaliencyMaps maps = saliency(m, f);
  const fs::path dir = out_dir(o);
  fs::create_directories(dir);
  write_pgm(dir / "saliency_gx.pgm", attribution_image(maps.gx));
  write_pgm(dir / "saliency_gy.pgm", attribution_image(maps.gy));
  out << "predicted: " << class_label(static_cast<int>(m.config.output_dim), static_cast<int>(maps.predicted_class))
      << "\n";
  out << "wrote " << (dir / "saliency_gx.pgm").string() << " " << (dir / "saliency_gy.pgm").string() << "\n";
  return kOk;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidParameter:
      return kUsage;
    case ErrorCode::NonFiniteInput:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::DomainError:
    case ErrorCode::BatchTooSmall:
    case ErrorCode::StaleCache:
    case ErrorCode::OutOfOrderEpoch:
      return kNumeric;
    default:
      return kData;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sobel-gradient MLP: prepare features, train, evaluate, predict, inspect"};
  app.require_subcommand(1);
  Options o;

  const auto data_flags = [&](CLI::App* c) {
    c->add_option("--dataset", o.dataset, "mnist or emnist_letters");
    c->add_option("--data-dir", o.data_dir, "directory holding the IDX files (fallback: $EDGEMLP_DATA_DIR)");
    c->add_option("--cache", o.cache, "EMFC1 feature cache");
    c->add_option("--subset", o.subset, "stratified sample of this many items before splitting (0 = all)");
  };
  const auto thread_flag = [&](CLI::App* c) {
    c->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };

  CLI::App* prepare = app.add_subcommand("prepare", "featurize a dataset into a cache file");
  prepare->add_option("--dataset", o.dataset, "mnist or emnist_letters")->required();
  prepare->add_option("--data-dir", o.data_dir, "directory holding the IDX files (fallback: $EDGEMLP_DATA_DIR)");
  prepare->add_option("--cache", o.cache, "output cache path")->required();
  thread_flag(prepare);

  CLI::App* train_cmd = app.add_subcommand("train", "split, train with early stopping, evaluate on test");
  data_flags(train_cmd);
  train_cmd->add_option("--model", o.model, "output model path (default <out>/model.sgmlp)");
  train_cmd->add_option("--out", o.out, "directory for history.jsonl and confusion.csv");
  train_cmd->add_option("--seed", o.seed, "seed for splits, init, shuffling and dropout");
  train_cmd->add_option("--batch-size", o.batch_size, "mini-batch size")->capture_default_str();
  train_cmd->add_option("--max-epochs", o.max_epochs, "epoch cap")->capture_default_str();
  train_cmd->add_option("--lr", o.lr, "initial Adam learning rate")->capture_default_str();
  thread_flag(train_cmd);

  CLI::App* eval = app.add_subcommand("eval", "recompute the test split from the model's seed and score it");
  data_flags(eval);
  eval->add_option("--model", o.model, "model file")->required();
  eval->add_option("--out", o.out, "write confusion.csv here instead of stdout");
  thread_flag(eval);

  CLI::App* predict_cmd = app.add_subcommand("predict", "classify one 28x28 image");
  predict_cmd->add_option("--model", o.model, "model file")->required();
  predict_cmd->add_option("--image", o.image, "PGM or raw 784-byte image")->required();

  CLI::App* inspect = app.add_subcommand("inspect", "report a model; optionally dump saliency maps");
  inspect->add_option("--model", o.model, "model file")->required();
  inspect->add_option("--image", o.image, "image to attribute");
  inspect->add_option("--out", o.out, "directory for saliency_gx.pgm / saliency_gy.pgm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    set_thread_count(o.threads);
    if (prepare->parsed()) return cmd_prepare(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out);
    if (predict_cmd->parsed()) return cmd_predict(o, out);
    return cmd_inspect(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"edgemlp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace edgemlp::cli
