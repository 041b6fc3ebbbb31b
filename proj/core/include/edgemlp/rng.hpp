#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgemlp/tensor.hpp"

namespace edgemlp {

/// xoshiro256** seeded through splitmix64. Every primitive is defined on top
/// of next_u64() with integer-only or IEEE-exact steps (except normal(), which
/// calls log/cos), so a seed yields the same stream on every platform.
///
/// `stream` lets one user seed fan out into independent generators for the
/// split, the initializer, and the training loop.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64() noexcept;

  /// Uniform in [0, 1) with 53 bits of resolution.
  double next_double() noexcept;
  /// Uniform in [0, 1) with 24 bits of resolution.
  float next_float() noexcept;
  /// Unbiased integer in [0, bound); bound must be positive.
  std::uint64_t next_below(std::uint64_t bound);

  float uniform(float lo, float hi);
  float normal(float mu, float sigma);
  bool bernoulli(double p);

  Matrix uniform(float lo, float hi, std::size_t rows, std::size_t cols);
  Matrix normal(float mu, float sigma, std::size_t rows, std::size_t cols);
  /// 0/1 entries.
  Matrix bernoulli(double p, std::size_t rows, std::size_t cols);

  /// Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Known streams, so callers never collide.
namespace rng_stream {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kValidation = 2;
inline constexpr std::uint64_t kInit = 3;
inline constexpr std::uint64_t kTraining = 4;
inline constexpr std::uint64_t kSubset = 5;
}  // namespace rng_stream

}  // namespace edgemlp
