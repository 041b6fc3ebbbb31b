#include "edgemlp/idx.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

#include "edgemlp/error.hpp"

namespace edgemlp {

namespace {

constexpr std::uint8_t kUnsignedByte = 0x08;
constexpr std::size_t kMaxRank = 4;

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t offset) {
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

void write_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

bool has_gzip_suffix(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::vector<std::uint8_t> read_gzip(const std::filesystem::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) fail(ErrorCode::IoError, "cannot open gzip file " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buffer[1 << 16];
  for (;;) {
    const int n = gzread(file, buffer, sizeof(buffer));
    if (n < 0) {
      int errnum = 0;
      const std::string msg = gzerror(file, &errnum);
      gzclose(file);
      fail(ErrorCode::IoError, "gzip read failed for " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), buffer, buffer + n);
  }
  gzclose(file);
  return out;
}

}  // namespace

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail(ErrorCode::TruncatedPayload, "IDX stream shorter than its magic");
  const std::uint32_t magic = read_be32(bytes, 0);
  const std::size_t rank = bytes[3];
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != kUnsignedByte || rank == 0 || rank > kMaxRank) {
    char hex[16];
    std::snprintf(hex, sizeof(hex), "0x%08x", magic);
    fail(ErrorCode::UnknownMagic, std::string("IDX magic ") + hex);
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header) fail(ErrorCode::TruncatedPayload, "IDX header declares rank " + std::to_string(rank));

  IdxTensor tensor;
  std::size_t count = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint32_t d = read_be32(bytes, 4 + 4 * i);
    tensor.dims.push_back(d);
    if (__builtin_mul_overflow(count, std::size_t{d}, &count)) {
      fail(ErrorCode::TruncatedPayload, "IDX dimensions overflow the address space");
    }
  }
  const std::size_t available = bytes.size() - header;
  if (count > available) {
    fail(ErrorCode::TruncatedPayload,
         "IDX declares " + std::to_string(count) + " bytes, " + std::to_string(available) + " available");
  }
  if (count < available) {
    fail(ErrorCode::TrailingBytes, std::to_string(available - count) + " bytes after the IDX payload");
  }
  tensor.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return tensor;
}

std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor) {
  std::vector<std::uint8_t> out{0, 0, kUnsignedByte, static_cast<std::uint8_t>(tensor.dims.size())};
  out.reserve(4 + 4 * tensor.dims.size() + tensor.data.size());
  for (const auto d : tensor.dims) write_be32(out, d);
  out.insert(out.end(), tensor.data.begin(), tensor.data.end());
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) fail(ErrorCode::MissingFile, path.string());
  if (has_gzip_suffix(path)) return read_gzip(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

IdxTensor read_idx_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_idx(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace edgemlp
