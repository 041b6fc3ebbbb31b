#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "edgemlp/dataset.hpp"
#include "edgemlp/idx.hpp"

namespace fixture {

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Image i carries a bright pixel at a label-dependent off-diagonal position,
// so transposition is observable, plus seeded noise.
inline std::vector<std::uint8_t> synthetic_images(const std::vector<std::uint8_t>& labels, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::uint8_t> px(labels.size() * edgemlp::kImagePixels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::uint8_t* img = px.data() + i * edgemlp::kImagePixels;
    for (std::size_t p = 0; p < edgemlp::kImagePixels; ++p) img[p] = static_cast<std::uint8_t>(gen() % 64);
    const std::size_t r = 1 + labels[i] % 26;
    img[r * 28 + 0] = 255;
  }
  return px;
}

// Writes a train/test IDX quartet using the dataset's canonical names.
// `raw_labels` are stored as-is (EMNIST raw labels are 1-based).
inline void write_dataset(const std::filesystem::path& dir, edgemlp::DatasetKind kind,
                          const std::vector<std::uint8_t>& train_raw, const std::vector<std::uint8_t>& test_raw,
                          std::uint64_t seed = 1) {
  const auto names = edgemlp::dataset_file_names(kind);
  const auto put = [&](const std::string& img_name, const std::string& lab_name,
                       const std::vector<std::uint8_t>& raw, std::uint64_t s) {
    const auto n = static_cast<std::uint32_t>(raw.size());
    write_bytes(dir / img_name, edgemlp::encode_idx({{n, 28, 28}, synthetic_images(raw, s)}));
    write_bytes(dir / lab_name, edgemlp::encode_idx({{n}, raw}));
  };
  put(names[0], names[1], train_raw, seed);
  put(names[2], names[3], test_raw, seed + 1);
}

// `per_class` samples of each label first..first+classes-1, interleaved.
inline std::vector<std::uint8_t> balanced_labels(int classes, std::size_t per_class, int first = 0) {
  std::vector<std::uint8_t> out;
  for (std::size_t k = 0; k < per_class; ++k) {
    for (int c = 0; c < classes; ++c) out.push_back(static_cast<std::uint8_t>(first + c));
  }
  return out;
}

}  // namespace fixture
