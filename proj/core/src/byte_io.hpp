#pragma once

// Little-endian encode/decode helpers shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "edgemlp/error.hpp"

namespace edgemlp::detail {

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> values) {
    out_.reserve(out_.size() + 4 * values.size());
    for (const float v : values) f32(v);
  }

  [[nodiscard]] std::size_t size() const noexcept { return out_.size(); }
  std::vector<std::uint8_t>& buffer() noexcept { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, ErrorCode truncated) : bytes_(bytes), truncated_(truncated) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > remaining()) {
      fail(truncated_, "needed " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) + ", " +
                           std::to_string(remaining()) + " left");
    }
    const auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(take(2))); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(take(4))); }
  std::uint64_t u64() { return le(take(8)); }
  float f32() { return std::bit_cast<float>(u32()); }
  void f32s(std::span<float> out) {
    const auto raw = take(4 * out.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::bit_cast<float>(static_cast<std::uint32_t>(le(raw.subspan(4 * i, 4))));
    }
  }

  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  [[nodiscard]] std::size_t position() const noexcept { return pos_; }

 private:
  static std::uint64_t le(std::span<const std::uint8_t> b) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < b.size(); ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  ErrorCode truncated_;
  std::size_t pos_ = 0;
};

/// Writes to "<path>.tmp" then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace edgemlp::detail
