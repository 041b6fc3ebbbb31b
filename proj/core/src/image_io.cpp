#include "edgemlp/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "byte_io.hpp"
#include "edgemlp/dataset.hpp"
#include "edgemlp/error.hpp"
#include "edgemlp/idx.hpp"

namespace edgemlp {

namespace {

class PgmTokens {
 public:
  explicit PgmTokens(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  unsigned long number() {
    skip_space_and_comments();
    std::size_t start = pos_;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) ++pos_;
    if (start == pos_) fail(ErrorCode::BadImageShape, "malformed PGM header");
    return std::stoul(std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_)));
  }

  // Exactly one whitespace byte separates maxval from binary raster data.
  std::size_t raster_start() const { return pos_ + 1; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 2;
};

void require_28(std::size_t rows, std::size_t cols) {
  if (rows != kImageSide || cols != kImageSide) {
    fail(ErrorCode::BadImageShape, "expected a 28x28 image, got " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

GrayImage parse_image(const std::vector<std::uint8_t>& bytes) {
  const bool pgm = bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2');
  if (!pgm) {
    if (bytes.size() != kImagePixels) {
      fail(ErrorCode::BadImageShape, "raw image must hold 784 bytes, got " + std::to_string(bytes.size()));
    }
    return {kImageSide, kImageSide, bytes};
  }
  PgmTokens tok(bytes);
  const std::size_t cols = tok.number();
  const std::size_t rows = tok.number();
  const unsigned long maxval = tok.number();
  require_28(rows, cols);
  if (maxval == 0 || maxval > 255) fail(ErrorCode::BadImageShape, "PGM maxval must be 1..255");

  GrayImage img{rows, cols, std::vector<std::uint8_t>(rows * cols)};
  const auto rescale = [maxval](unsigned long v) {
    if (v > maxval) fail(ErrorCode::BadImageShape, "PGM sample exceeds maxval");
    return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
  };
  if (bytes[1] == '5') {
    const std::size_t start = tok.raster_start();
    if (bytes.size() < start + img.pixels.size()) fail(ErrorCode::TruncatedPayload, "PGM raster is short");
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = rescale(bytes[start + i]);
  } else {
    for (auto& p : img.pixels) p = rescale(tok.number());
  }
  return img;
}

GrayImage read_image(const std::filesystem::path& path) {
  try {
    return parse_image(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.message());
  }
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.rows * image.cols) fail(ErrorCode::ShapeMismatch, "pixel count disagrees with shape");
  const std::string header =
      "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  detail::write_file_atomic(path, out);
}

GrayImage attribution_image(const Matrix& map) {
  GrayImage img{map.rows(), map.cols(), std::vector<std::uint8_t>(map.size(), 0)};
  float peak = 0.0f;
  for (const float v : map.data()) peak = std::max(peak, std::fabs(v));
  if (peak == 0.0f) return img;
  for (std::size_t i = 0; i < map.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(std::fabs(map.data()[i]) / peak * 255.0f));
  }
  return img;
}

}  // namespace edgemlp
