#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edgemlp {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

enum class DatasetKind { Mnist, EmnistLetters };

std::string_view dataset_name(DatasetKind kind) noexcept;
/// "mnist" or "emnist_letters"; anything else raises InvalidParameter.
DatasetKind parse_dataset_name(std::string_view name);
int class_count(DatasetKind kind) noexcept;
/// Printable class label: '0'..'9' for digits, 'A'..'Z' for letters.
std::string class_label(int class_count, int index);

/// Raw 28x28 grayscale images with integer labels in [0, class_count).
struct LabeledImageSet {
  std::vector<std::uint8_t> images;  // N * 784, row-major per image
  std::vector<std::uint8_t> labels;  // N
  int class_count = 0;
  std::string name;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] std::span<const std::uint8_t> image(std::size_t i) const noexcept {
    return {images.data() + i * kImagePixels, kImagePixels};
  }
};

/// Raises ShapeMismatch / LabelOutOfRange when an invariant is broken.
void validate(const LabeledImageSet& set);

/// Reads an image/label IDX pair. `label_offset` is subtracted from every
/// raw label; `transpose` flips each image across its main diagonal.
LabeledImageSet load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                              int class_count, int label_offset, bool transpose, std::string name);

/// Train and test portions of the named dataset, concatenated in that order.
/// Looks for the canonical IDX file names, with or without a ".gz" suffix.
/// EMNIST Letters labels are shifted from 1..26 to 0..25 and its images are
/// transposed into the same upright orientation MNIST uses.
LabeledImageSet load_dataset(DatasetKind kind, const std::filesystem::path& source_dir);

/// Canonical file names for the train/test portions, without compression
/// suffix: {train images, train labels, test images, test labels}.
std::vector<std::string> dataset_file_names(DatasetKind kind);

/// Exact rational, so 0.2 * 70000 is computed in integers.
struct Fraction {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  [[nodiscard]] double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
};

/// round(count * fraction) with ties to even.
std::uint64_t scaled_count(std::uint64_t count, Fraction fraction);

struct SplitSpec {
  Fraction test_fraction{1, 5};
  Fraction validation_fraction{1, 10};
  std::uint64_t seed = 0;
};

void validate(const SplitSpec& spec);

/// Two disjoint index lists that together cover [0, N).
struct IndexSplit {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
};

/// Per class (in class order): seeded shuffle of that class's indices; the
/// first q_c go to `second` (the held-out side), the rest to `first`. The q_c
/// are a largest-remainder apportionment of scaled_count(N, fraction), so
/// |q_c - n_c * fraction| < 1 and sum(q_c) = round(N * fraction); on classes
/// where n_c * fraction is integral, q_c is exact. Both lists come back
/// sorted ascending. Every class needs at least 5 samples (DegenerateClass).
IndexSplit stratified_indices(std::span<const std::uint8_t> labels, int class_count, Fraction fraction,
                              std::uint64_t seed, std::uint64_t stream);

/// {train, test} indices for the 80/20 split.
IndexSplit stratified_split_indices(std::span<const std::uint8_t> labels, int class_count, const SplitSpec& spec);

/// {fit, val} positions within a training portion of size n: one seeded
/// global shuffle, then the final scaled_count(n, validation_fraction)
/// positions are validation. Drawn once per run; both lists keep the
/// shuffled order.
IndexSplit validation_indices(std::size_t n, const SplitSpec& spec);

LabeledImageSet select(const LabeledImageSet& set, std::span<const std::size_t> indices);

std::pair<LabeledImageSet, LabeledImageSet> stratified_split(const LabeledImageSet& set, const SplitSpec& spec);
std::pair<LabeledImageSet, LabeledImageSet> carve_validation(const LabeledImageSet& train, const SplitSpec& spec);

/// Stratified sample of roughly `n` items (per-class rounding), ascending
/// index order. Used by the reduced-size training mode.
std::vector<std::size_t> stratified_subset_indices(std::span<const std::uint8_t> labels, int class_count,
                                                   std::size_t n, std::uint64_t seed);

}  // namespace edgemlp
