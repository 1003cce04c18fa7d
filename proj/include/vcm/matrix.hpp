#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vcm {

// Dense row-major matrix of doubles. Deliberately minimal: the lattices and
// toy attention layers only need element access, row views and a matmul.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transposed() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a (n x k) * b (k x m). Throws DimensionMismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

// Row vector times matrix: v (k) * b (k x m) -> m.
std::vector<double> vecmat(std::span<const double> v, const Matrix& b);

// Matrix times column vector: a (n x k) * v (k) -> n.
std::vector<double> matvec(const Matrix& a, std::span<const double> v);

// Column-wise mean over rows; empty matrix yields an empty vector.
std::vector<double> mean_rows(const Matrix& a);

}  // namespace vcm
