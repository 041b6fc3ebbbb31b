#include "edgemlp/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace edgemlp {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed) {
  std::uint64_t sm = seed ^ (stream * 0xd1342543de82ef95ULL);
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

float Rng::next_float() noexcept { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

std::uint64_t Rng::next_below(std::uint64_t bound) {
  if (bound == 0) fail(ErrorCode::InvalidParameter, "next_below(0)");
  // Rejection on the top of the range keeps every residue equally likely.
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

float Rng::uniform(float lo, float hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    fail(ErrorCode::InvalidParameter, "uniform bounds [" + std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }
  return lo + (hi - lo) * next_float();
}

float Rng::normal(float mu, float sigma) {
  if (!(sigma >= 0.0f) || !std::isfinite(mu) || !std::isfinite(sigma)) {
    fail(ErrorCode::InvalidParameter, "normal sigma " + std::to_string(sigma));
  }
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return mu + sigma * static_cast<float>(spare_normal_);
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return mu + sigma * static_cast<float>(radius * std::cos(angle));
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidParameter, "bernoulli p = " + std::to_string(p));
  if (p == 1.0) {
    next_u64();
    return true;
  }
  return next_double() < p;
}

Matrix Rng::uniform(float lo, float hi, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = uniform(lo, hi);
  return m;
}

Matrix Rng::normal(float mu, float sigma, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = normal(mu, sigma);
  return m;
}

Matrix Rng::bernoulli(double p, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.data()) v = bernoulli(p) ? 1.0f : 0.0f;
  return m;
}

}  // namespace edgemlp
