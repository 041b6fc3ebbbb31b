#include "edgemlp/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "edgemlp/error.hpp"
#include "edgemlp/idx.hpp"
#include "edgemlp/rng.hpp"

namespace edgemlp {

namespace {

constexpr std::size_t kMinPerClass = 5;

std::filesystem::path locate(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  const auto plain = dir / name;
  if (std::filesystem::is_regular_file(plain, ec)) return plain;
  const auto gz = dir / (name + ".gz");
  if (std::filesystem::is_regular_file(gz, ec)) return gz;
  fail(ErrorCode::MissingFile, plain.string() + " (or .gz)");
}

// Largest-remainder apportionment: every class gets floor(n_c * f), and the
// seats left over up to scaled_count(N, f) go to the largest fractional
// remainders (ties to the lower class index). Each class stays within one
// sample of its exact quota and the total is exactly round(N * f).
std::vector<std::size_t> apportion(const std::vector<std::vector<std::size_t>>& by_class, std::size_t total,
                                   Fraction fraction) {
  std::vector<std::size_t> quota(by_class.size());
  std::vector<std::uint64_t> remainder(by_class.size());
  std::uint64_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const unsigned __int128 product = static_cast<unsigned __int128>(by_class[c].size()) * fraction.num;
    quota[c] = static_cast<std::size_t>(product / fraction.den);
    remainder[c] = static_cast<std::uint64_t>(product % fraction.den);
    assigned += quota[c];
  }
  std::vector<std::size_t> order(by_class.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  std::uint64_t extra = scaled_count(total, fraction) - assigned;
  for (std::size_t k = 0; extra > 0 && k < order.size(); ++k, --extra) ++quota[order[k]];
  return quota;
}

}  // namespace

std::string_view dataset_name(DatasetKind kind) noexcept {
  return kind == DatasetKind::Mnist ? "mnist" : "emnist_letters";
}

DatasetKind parse_dataset_name(std::string_view name) {
  if (name == "mnist") return DatasetKind::Mnist;
  if (name == "emnist_letters") return DatasetKind::EmnistLetters;
  fail(ErrorCode::InvalidParameter, "unknown dataset '" + std::string(name) + "' (expected mnist or emnist_letters)");
}

int class_count(DatasetKind kind) noexcept { return kind == DatasetKind::Mnist ? 10 : 26; }

std::string class_label(int class_count, int index) {
  if (class_count == 26) return std::string(1, static_cast<char>('A' + index));
  return std::to_string(index);
}

void validate(const LabeledImageSet& set) {
  if (set.images.size() != set.labels.size() * kImagePixels) {
    fail(ErrorCode::ShapeMismatch, set.name + ": " + std::to_string(set.images.size()) + " pixels for " +
                                       std::to_string(set.labels.size()) + " labels");
  }
  if (set.class_count <= 0 || set.class_count > 256) {
    fail(ErrorCode::InvalidParameter, set.name + ": class_count " + std::to_string(set.class_count));
  }
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (set.labels[i] >= set.class_count) {
      fail(ErrorCode::LabelOutOfRange, set.name + ": label " + std::to_string(set.labels[i]) + " at index " +
                                           std::to_string(i) + " outside [0, " + std::to_string(set.class_count) +
                                           ")");
    }
  }
}

LabeledImageSet load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                              int class_count, int label_offset, bool transpose, std::string name) {
  const IdxTensor img = read_idx_file(images);
  const IdxTensor lab = read_idx_file(labels);
  if (img.rank() != 3 || img.dims[1] != kImageSide || img.dims[2] != kImageSide) {
    fail(ErrorCode::ShapeMismatch, images.string() + ": expected an (N, 28, 28) image tensor");
  }
  if (lab.rank() != 1) fail(ErrorCode::ShapeMismatch, labels.string() + ": expected a rank-1 label tensor");
  if (img.dims[0] != lab.dims[0]) {
    fail(ErrorCode::ShapeMismatch, "image count " + std::to_string(img.dims[0]) + " != label count " +
                                       std::to_string(lab.dims[0]));
  }

  LabeledImageSet set;
  set.class_count = class_count;
  set.name = std::move(name);
  set.labels.resize(lab.data.size());
  for (std::size_t i = 0; i < lab.data.size(); ++i) {
    const int shifted = static_cast<int>(lab.data[i]) - label_offset;
    if (shifted < 0 || shifted >= class_count) {
      fail(ErrorCode::LabelOutOfRange, labels.string() + ": raw label " + std::to_string(lab.data[i]) +
                                           " at index " + std::to_string(i) + " maps outside [0, " +
                                           std::to_string(class_count) + ")");
    }
    set.labels[i] = static_cast<std::uint8_t>(shifted);
  }
  if (!transpose) {
    set.images = img.data;
  } else {
    set.images.resize(img.data.size());
    for (std::size_t n = 0; n < lab.data.size(); ++n) {
      const std::uint8_t* src = img.data.data() + n * kImagePixels;
      std::uint8_t* dst = set.images.data() + n * kImagePixels;
      for (std::size_t r = 0; r < kImageSide; ++r)
        for (std::size_t c = 0; c < kImageSide; ++c) dst[c * kImageSide + r] = src[r * kImageSide + c];
    }
  }
  return set;
}

std::vector<std::string> dataset_file_names(DatasetKind kind) {
  if (kind == DatasetKind::Mnist) {
    return {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
            "t10k-labels-idx1-ubyte"};
  }
  return {"emnist-letters-train-images-idx3-ubyte", "emnist-letters-train-labels-idx1-ubyte",
          "emnist-letters-test-images-idx3-ubyte", "emnist-letters-test-labels-idx1-ubyte"};
}

LabeledImageSet load_dataset(DatasetKind kind, const std::filesystem::path& source_dir) {
  const auto names = dataset_file_names(kind);
  // Resolve all four files up front so a missing file is reported before any parsing.
  std::vector<std::filesystem::path> paths;
  for (const auto& n : names) paths.push_back(locate(source_dir, n));

  const bool letters = kind == DatasetKind::EmnistLetters;
  const int classes = class_count(kind);
  const int offset = letters ? 1 : 0;
  const std::string name(dataset_name(kind));

  LabeledImageSet all = load_idx_pair(paths[0], paths[1], classes, offset, letters, name);
  LabeledImageSet test = load_idx_pair(paths[2], paths[3], classes, offset, letters, name);
  all.images.insert(all.images.end(), test.images.begin(), test.images.end());
  all.labels.insert(all.labels.end(), test.labels.begin(), test.labels.end());
  return all;
}

std::uint64_t scaled_count(std::uint64_t count, Fraction fraction) {
  if (fraction.den == 0) fail(ErrorCode::InvalidParameter, "fraction with zero denominator");
  const unsigned __int128 product = static_cast<unsigned __int128>(count) * fraction.num;
  auto quotient = static_cast<std::uint64_t>(product / fraction.den);
  const auto remainder = static_cast<std::uint64_t>(product % fraction.den);
  const unsigned __int128 twice = static_cast<unsigned __int128>(remainder) * 2;
  if (twice > fraction.den || (twice == fraction.den && (quotient & 1U) != 0)) ++quotient;
  return quotient;
}

void validate(const SplitSpec& spec) {
  for (const Fraction f : {spec.test_fraction, spec.validation_fraction}) {
    if (f.den == 0 || f.num == 0 || f.num >= f.den) {
      fail(ErrorCode::InvalidParameter, "split fractions must lie strictly between 0 and 1");
    }
  }
}

IndexSplit stratified_indices(std::span<const std::uint8_t> labels, int class_count, Fraction fraction,
                              std::uint64_t seed, std::uint64_t stream) {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      fail(ErrorCode::LabelOutOfRange, "label " + std::to_string(labels[i]) + " at index " + std::to_string(i));
    }
    by_class[labels[i]].push_back(i);
  }
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < kMinPerClass) {
      fail(ErrorCode::DegenerateClass, "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                           " samples; stratification needs at least " +
                                           std::to_string(kMinPerClass));
    }
  }
  const std::vector<std::size_t> quota = apportion(by_class, labels.size(), fraction);

  Rng rng(seed, stream);
  IndexSplit split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    rng.shuffle(members);
    const std::size_t held = quota[c];
    split.second.insert(split.second.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(held));
    split.first.insert(split.first.end(), members.begin() + static_cast<std::ptrdiff_t>(held), members.end());
  }
  std::sort(split.first.begin(), split.first.end());
  std::sort(split.second.begin(), split.second.end());
  return split;
}

IndexSplit stratified_split_indices(std::span<const std::uint8_t> labels, int class_count, const SplitSpec& spec) {
  validate(spec);
  return stratified_indices(labels, class_count, spec.test_fraction, spec.seed, rng_stream::kSplit);
}

IndexSplit validation_indices(std::size_t n, const SplitSpec& spec) {
  validate(spec);
  if (n == 0) fail(ErrorCode::EmptyInput, "cannot carve validation data from an empty training set");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed, rng_stream::kValidation);
  rng.shuffle(order);
  const auto val = static_cast<std::size_t>(scaled_count(n, spec.validation_fraction));
  IndexSplit split;
  split.first.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(val));
  split.second.assign(order.end() - static_cast<std::ptrdiff_t>(val), order.end());
  return split;
}

LabeledImageSet select(const LabeledImageSet& set, std::span<const std::size_t> indices) {
  LabeledImageSet out;
  out.class_count = set.class_count;
  out.name = set.name;
  out.labels.reserve(indices.size());
  out.images.reserve(indices.size() * kImagePixels);
  for (const auto i : indices) {
    if (i >= set.size()) fail(ErrorCode::ShapeMismatch, "index " + std::to_string(i) + " out of range");
    out.labels.push_back(set.labels[i]);
    const auto img = set.image(i);
    out.images.insert(out.images.end(), img.begin(), img.end());
  }
  return out;
}

std::pair<LabeledImageSet, LabeledImageSet> stratified_split(const LabeledImageSet& set, const SplitSpec& spec) {
  const auto split = stratified_split_indices(set.labels, set.class_count, spec);
  return {select(set, split.first), select(set, split.second)};
}

std::pair<LabeledImageSet, LabeledImageSet> carve_validation(const LabeledImageSet& train, const SplitSpec& spec) {
  const auto split = validation_indices(train.size(), spec);
  return {select(train, split.first), select(train, split.second)};
}

std::vector<std::size_t> stratified_subset_indices(std::span<const std::uint8_t> labels, int class_count,
                                                   std::size_t n, std::uint64_t seed) {
  if (n >= labels.size()) {
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  return stratified_indices(labels, class_count, Fraction{n, labels.size()}, seed, rng_stream::kSubset).second;
}

}  // namespace edgemlp
