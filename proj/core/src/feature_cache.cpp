#include "edgemlp/feature_cache.hpp"

#include <cstring>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "edgemlp/error.hpp"
#include "edgemlp/idx.hpp"

namespace edgemlp {

std::vector<std::uint8_t> encode_feature_cache(const FeatureSet& set) {
  if (set.features.rows() != set.labels.size()) {
    fail(ErrorCode::ShapeMismatch, "feature rows and label count differ");
  }
  if (set.size() > std::numeric_limits<std::uint32_t>::max() || set.class_count <= 0 || set.class_count > 255) {
    fail(ErrorCode::InvalidParameter, "feature set does not fit the cache header");
  }
  detail::ByteWriter w;
  w.bytes(kFeatureCacheMagic, sizeof(kFeatureCacheMagic));
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.u32(static_cast<std::uint32_t>(set.features.cols()));
  w.u8(static_cast<std::uint8_t>(set.class_count));
  w.f32s(set.features.data());
  w.bytes(set.labels.data(), set.labels.size());
  return std::move(w.buffer());
}

FeatureSet decode_feature_cache(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, ErrorCode::TruncatedPayload);
  if (bytes.size() < sizeof(kFeatureCacheMagic) ||
      std::memcmp(bytes.data(), kFeatureCacheMagic, sizeof(kFeatureCacheMagic)) != 0) {
    fail(ErrorCode::BadMagic, "not an EMFC1 feature cache");
  }
  r.take(sizeof(kFeatureCacheMagic));
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  const int classes = r.u8();
  if (d != kFeatureDim) {
    fail(ErrorCode::ShapeMismatch, "cache rows have " + std::to_string(d) + " values, expected 1568");
  }
  if (classes == 0) fail(ErrorCode::ShapeMismatch, "cache declares zero classes");
  const std::size_t expected = std::size_t{n} * d * 4 + n;
  if (r.remaining() < expected) fail(ErrorCode::TruncatedPayload, "cache shorter than its header declares");
  if (r.remaining() > expected) fail(ErrorCode::TrailingBytes, "bytes after the cache payload");

  FeatureSet set{Matrix(n, d), {}, classes};
  r.f32s(set.features.data());
  const auto labels = r.take(n);
  set.labels.assign(labels.begin(), labels.end());
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (set.labels[i] >= classes) {
      fail(ErrorCode::LabelOutOfRange, "cache label " + std::to_string(set.labels[i]) + " at row " + std::to_string(i));
    }
  }
  return set;
}

void write_feature_cache(const std::filesystem::path& path, const FeatureSet& set) {
  const auto bytes = encode_feature_cache(set);
  detail::write_file_atomic(path, bytes);
}

FeatureSet read_feature_cache(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_feature_cache(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

}  // namespace edgemlp
