#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgemlp/mlp.hpp"

namespace edgemlp {

/// Model file, version 1. Integers and floats little-endian.
///
///   offset  size   field
///   0       8      magic "SGMLP1\0\0"
///   8       2      u16 format version (1)
///   10      4      u32 H, header length in bytes
///   14      H      header: UTF-8 "key=value\n" lines, keys in fixed order:
///                    input_dim, hidden_dims (comma list), dropout_rates,
///                    output_dim, bn_epsilon, bn_momentum, dataset, seed,
///                    epochs
///   14+H    ...    payload:
///                    u32 tensor count
///                    per tensor: u32 element count, then that many f32
///                  tensors in BasicModel::stored_tensors() order (per layer:
///                  weights [in x out, row-major], bias, and on hidden layers
///                  gamma, beta, moving_mean, moving_var)
///   end-8   8      u64 FNV-1a 64 checksum of the payload bytes
inline constexpr char kModelMagic[8] = {'S', 'G', 'M', 'L', 'P', '1', '\0', '\0'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

struct ModelMetadata {
  std::string dataset;
  std::uint64_t seed = 0;
  int epochs = 0;  // epochs trained

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

struct StoredModel {
  Model model;
  ModelMetadata metadata;
};

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;

std::vector<std::uint8_t> encode_model(const Model& model, const ModelMetadata& metadata);

/// Raises BadMagic, VersionUnsupported, ChecksumMismatch or ShapeMismatch.
StoredModel decode_model(std::span<const std::uint8_t> bytes);

/// Atomic (temp file + rename). Raises IoError.
void save_model(const std::filesystem::path& path, const Model& model, const ModelMetadata& metadata);
StoredModel load_model(const std::filesystem::path& path);

}  // namespace edgemlp
