#include "edgemlp/tensor.hpp"

#include <cblas.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace edgemlp {

namespace {

std::atomic<int> g_threads{1};

std::string shape_str(std::size_t r, std::size_t c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

template <typename T>
void require_same_shape(const BasicMatrix<T>& a, const BasicMatrix<T>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::DimensionMismatch,
         std::string(what) + ": " + shape_str(a.rows(), a.cols()) + " vs " + shape_str(b.rows(), b.cols()));
  }
}

template <typename T>
T apply(BinaryOp op, T x, T y) {
  switch (op) {
    case BinaryOp::Add: return x + y;
    case BinaryOp::Sub: return x - y;
    case BinaryOp::Mul: return x * y;
    case BinaryOp::Div: return x / y;
    case BinaryOp::Max: return std::max(x, y);
  }
  return x;
}

template <typename T>
T apply(UnaryOp op, T x) {
  switch (op) {
    case UnaryOp::Relu:
      return x > T{0} ? x : T{0};
    case UnaryOp::Sqrt:
      if (x < T{0}) fail(ErrorCode::DomainError, "sqrt of negative value " + std::to_string(x));
      return std::sqrt(x);
    case UnaryOp::Exp: {
      const T y = std::exp(x);
      if (!std::isfinite(y)) fail(ErrorCode::DomainError, "exp overflow at " + std::to_string(x));
      return y;
    }
    case UnaryOp::Log:
      if (!(x > T{0})) fail(ErrorCode::DomainError, "log of non-positive value " + std::to_string(x));
      return std::log(x);
  }
  return x;
}

CBLAS_TRANSPOSE to_cblas(Transpose t) { return t == Transpose::Yes ? CblasTrans : CblasNoTrans; }

}  // namespace

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, T fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    fail(ErrorCode::DimensionMismatch, "buffer of " + std::to_string(data_.size()) +
                                           " values for shape " + shape_str(rows, cols));
  }
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::identity(std::size_t n) {
  BasicMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
  return m;
}

template <typename T>
void BasicMatrix<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
void gemm(Transpose trans_a, Transpose trans_b, T alpha, const BasicMatrix<T>& a,
          const BasicMatrix<T>& b, T beta, BasicMatrix<T>& c) {
  const std::size_t m = trans_a == Transpose::No ? a.rows() : a.cols();
  const std::size_t k = trans_a == Transpose::No ? a.cols() : a.rows();
  const std::size_t kb = trans_b == Transpose::No ? b.rows() : b.cols();
  const std::size_t n = trans_b == Transpose::No ? b.cols() : b.rows();
  if (k != kb) {
    fail(ErrorCode::DimensionMismatch, "gemm inner dimensions " + std::to_string(k) + " vs " + std::to_string(kb));
  }
  if (c.rows() != m || c.cols() != n) {
    fail(ErrorCode::DimensionMismatch, "gemm output " + shape_str(c.rows(), c.cols()) + ", expected " + shape_str(m, n));
  }
  if (m == 0 || n == 0) return;
  if (k == 0) {
    for (auto& v : c.data()) v *= beta;
    return;
  }
  const auto lda = static_cast<blasint>(std::max<std::size_t>(a.cols(), 1));
  const auto ldb = static_cast<blasint>(std::max<std::size_t>(b.cols(), 1));
  const auto ldc = static_cast<blasint>(n);
  if constexpr (std::is_same_v<T, float>) {
    cblas_sgemm(CblasRowMajor, to_cblas(trans_a), to_cblas(trans_b), static_cast<blasint>(m),
                static_cast<blasint>(n), static_cast<blasint>(k), alpha, a.data().data(), lda,
                b.data().data(), ldb, beta, c.data().data(), ldc);
  } else {
    cblas_dgemm(CblasRowMajor, to_cblas(trans_a), to_cblas(trans_b), static_cast<blasint>(m),
                static_cast<blasint>(n), static_cast<blasint>(k), alpha, a.data().data(), lda,
                b.data().data(), ldb, beta, c.data().data(), ldc);
  }
}

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::DimensionMismatch,
         "matmul " + shape_str(a.rows(), a.cols()) + " x " + shape_str(b.rows(), b.cols()));
  }
  BasicMatrix<T> c(a.rows(), b.cols());
  gemm(Transpose::No, Transpose::No, T{1}, a, b, T{0}, c);
  return c;
}

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& m) {
  BasicMatrix<T> t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

template <typename T>
BasicMatrix<T> elementwise(BinaryOp op, const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  require_same_shape(a, b, "elementwise");
  BasicMatrix<T> out(a.rows(), a.cols());
  const auto x = a.data();
  const auto y = b.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = apply(op, x[i], y[i]);
  return out;
}

template <typename T>
BasicMatrix<T> elementwise(UnaryOp op, const BasicMatrix<T>& a) {
  BasicMatrix<T> out(a.rows(), a.cols());
  const auto x = a.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = apply(op, x[i]);
  return out;
}

template <typename T>
BasicMatrix<T> row_broadcast(BinaryOp op, const BasicMatrix<T>& m, std::span<const T> row) {
  if (row.size() != m.cols()) {
    fail(ErrorCode::DimensionMismatch, "row_broadcast: row of " + std::to_string(row.size()) +
                                           " against " + std::to_string(m.cols()) + " columns");
  }
  BasicMatrix<T> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto in = m.row(r);
    auto o = out.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = apply(op, in[c], row[c]);
  }
  return out;
}

template <typename T>
std::vector<T> reduce(Axis axis, Reduction reduction, const BasicMatrix<T>& m) {
  const std::size_t outer = axis == Axis::Down ? m.cols() : m.rows();
  const std::size_t inner = axis == Axis::Down ? m.rows() : m.cols();
  if (inner == 0 && reduction != Reduction::Sum) {
    fail(ErrorCode::EmptyInput, "reduction over an empty axis");
  }
  const auto at = [&](std::size_t o, std::size_t i) -> T {
    return axis == Axis::Down ? m(i, o) : m(o, i);
  };
  std::vector<T> result(outer, T{0});
  for (std::size_t o = 0; o < outer; ++o) {
    switch (reduction) {
      case Reduction::Sum:
      case Reduction::Mean: {
        T acc{0};
        for (std::size_t i = 0; i < inner; ++i) acc += at(o, i);
        result[o] = reduction == Reduction::Sum ? acc : acc / static_cast<T>(inner);
        break;
      }
      case Reduction::Var: {
        T acc{0};
        for (std::size_t i = 0; i < inner; ++i) acc += at(o, i);
        const T mean = acc / static_cast<T>(inner);
        T sq{0};
        for (std::size_t i = 0; i < inner; ++i) {
          const T d = at(o, i) - mean;
          sq += d * d;
        }
        result[o] = sq / static_cast<T>(inner);
        break;
      }
      case Reduction::Max: {
        T best = at(o, 0);
        for (std::size_t i = 1; i < inner; ++i) best = std::max(best, at(o, i));
        result[o] = best;
        break;
      }
    }
  }
  return result;
}

template <typename T>
std::size_t argmax(std::span<const T> values) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "argmax of an empty span");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename T>
std::vector<std::size_t> argmax(Axis axis, const BasicMatrix<T>& m) {
  if (axis == Axis::Across) {
    std::vector<std::size_t> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = argmax<T>(m.row(r));
    return out;
  }
  const auto t = transpose(m);
  return argmax(Axis::Across, t);
}

void set_thread_count(int threads) {
  const int n = std::max(threads, 1);
  g_threads.store(n);
  openblas_set_num_threads(n);
}

int thread_count() noexcept { return g_threads.load(); }

#define EDGEMLP_INSTANTIATE(T)                                                                     \
  template class BasicMatrix<T>;                                                                   \
  template void gemm<T>(Transpose, Transpose, T, const BasicMatrix<T>&, const BasicMatrix<T>&, T, \
                        BasicMatrix<T>&);                                                          \
  template BasicMatrix<T> matmul<T>(const BasicMatrix<T>&, const BasicMatrix<T>&);                 \
  template BasicMatrix<T> transpose<T>(const BasicMatrix<T>&);                                     \
  template BasicMatrix<T> elementwise<T>(BinaryOp, const BasicMatrix<T>&, const BasicMatrix<T>&);  \
  template BasicMatrix<T> elementwise<T>(UnaryOp, const BasicMatrix<T>&);                          \
  template BasicMatrix<T> row_broadcast<T>(BinaryOp, const BasicMatrix<T>&, std::span<const T>);   \
  template std::vector<T> reduce<T>(Axis, Reduction, const BasicMatrix<T>&);                       \
  template std::size_t argmax<T>(std::span<const T>);                                              \
  template std::vector<std::size_t> argmax<T>(Axis, const BasicMatrix<T>&);

EDGEMLP_INSTANTIATE(float)
EDGEMLP_INSTANTIATE(double)

#undef EDGEMLP_INSTANTIATE

}  // namespace edgemlp
