#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "edgemlp/error.hpp"

namespace edgemlp {

/// Dense row-major 2-D array. All model state and math run at `float`;
/// the `double` instantiation exists so gradient checks can run the same
/// code paths at higher precision.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0});
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data);

  static BasicMatrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<T> data() noexcept { return data_; }
  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
  [[nodiscard]] std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  void fill(T value);

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;

enum class Transpose { No, Yes };

/// c = alpha * op(a) * op(b) + beta * c. `c` must already have the result
/// shape. Backed by single-precision/double-precision BLAS; each output
/// element is owned by exactly one task, so results are reproducible for a
/// fixed thread count.
template <typename T>
void gemm(Transpose trans_a, Transpose trans_b, T alpha, const BasicMatrix<T>& a,
          const BasicMatrix<T>& b, T beta, BasicMatrix<T>& c);

template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b);

template <typename T>
BasicMatrix<T> transpose(const BasicMatrix<T>& m);

enum class BinaryOp { Add, Sub, Mul, Div, Max };
enum class UnaryOp { Relu, Sqrt, Exp, Log };

/// Elementwise a (op) b on equal shapes.
template <typename T>
BasicMatrix<T> elementwise(BinaryOp op, const BasicMatrix<T>& a, const BasicMatrix<T>& b);

/// sqrt and log of a negative value raise DomainError, as does log(0) and an
/// exp that overflows.
template <typename T>
BasicMatrix<T> elementwise(UnaryOp op, const BasicMatrix<T>& a);

/// m[r, :] (op) row for every row r.
template <typename T>
BasicMatrix<T> row_broadcast(BinaryOp op, const BasicMatrix<T>& m, std::span<const T> row);

/// Down collapses the rows (one value per column); Across collapses the
/// columns (one value per row).
enum class Axis { Down, Across };
enum class Reduction { Sum, Mean, Var, Max };

/// Sums accumulate in index order. Var is the biased (population) variance
/// around the mean computed in a first pass.
template <typename T>
std::vector<T> reduce(Axis axis, Reduction reduction, const BasicMatrix<T>& m);

/// Index of the maximum along the axis; ties resolve to the lowest index.
template <typename T>
std::vector<std::size_t> argmax(Axis axis, const BasicMatrix<T>& m);

/// Lowest-index argmax of a single span.
template <typename T>
std::size_t argmax(std::span<const T> values);

/// Threads used by BLAS and by the data-parallel featurizer. Changing the
/// count may change low-order bits of BLAS results, so determinism holds for
/// a fixed count.
void set_thread_count(int threads);
int thread_count() noexcept;

}  // namespace edgemlp
