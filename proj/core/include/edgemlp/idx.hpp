#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace edgemlp {

/// Unsigned-byte IDX tensor: big-endian magic 0x0000 0x08 <rank>, then rank
/// big-endian u32 dimensions, then the row-major payload.
struct IdxTensor {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;

  [[nodiscard]] std::size_t rank() const noexcept { return dims.size(); }
};

/// Consumes exactly header + product(dims) bytes. Raises UnknownMagic,
/// TruncatedPayload or TrailingBytes.
IdxTensor parse_idx(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor);

/// Whole-file read; transparently inflates when the name ends in ".gz".
/// Raises MissingFile / IoError.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

IdxTensor read_idx_file(const std::filesystem::path& path);

}  // namespace edgemlp
