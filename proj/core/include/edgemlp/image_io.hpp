#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "edgemlp/tensor.hpp"

namespace edgemlp {

struct GrayImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

// Accepts binary (P5) or ASCII (P2) PGM with maxval <= 255, or a headerless
// file of exactly 784 bytes. Anything that is not 28x28 is BadImageShape.
GrayImage read_image(const std::filesystem::path& path);

GrayImage parse_image(const std::vector<std::uint8_t>& bytes);

void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// |v| / max|v| scaled to 0..255; an all-zero map renders black.
GrayImage attribution_image(const Matrix& map);

}  // namespace edgemlp
