#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "edgemlp/edge_features.hpp"

namespace edgemlp {

/// Feature cache, version 1 ("EMFC1"). All integers and floats little-endian:
///
///   offset  size     field
///   0       6        magic "EMFC1\0"
///   6       4        u32 N (rows)
///   10      4        u32 D (columns, 1568)
///   14      1        u8 class_count
///   15      4*N*D    f32 features, row-major
///   ...     N        u8 labels
inline constexpr char kFeatureCacheMagic[6] = {'E', 'M', 'F', 'C', '1', '\0'};

std::vector<std::uint8_t> encode_feature_cache(const FeatureSet& set);
FeatureSet decode_feature_cache(std::span<const std::uint8_t> bytes);

void write_feature_cache(const std::filesystem::path& path, const FeatureSet& set);
FeatureSet read_feature_cache(const std::filesystem::path& path);

}  // namespace edgemlp
