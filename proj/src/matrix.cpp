#include "vcm/matrix.hpp"

#include <string>

#include "vcm/error.hpp"

namespace vcm {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) {
      throw DimensionMismatch("ragged rows: row " + std::to_string(r) +
                              " has " + std::to_string(rows[r].size()) +
                              " columns, expected " + std::to_string(m.cols()));
    }
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionMismatch("matmul: " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " times " +
                            std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto src = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

std::vector<double> vecmat(std::span<const double> v, const Matrix& b) {
  if (v.size() != b.rows()) {
    throw DimensionMismatch("vecmat: vector of " + std::to_string(v.size()) +
                            " against " + std::to_string(b.rows()) + " rows");
  }
  std::vector<double> out(b.cols(), 0.0);
  for (std::size_t k = 0; k < v.size(); ++k) {
    auto src = b.row(k);
    for (std::size_t j = 0; j < b.cols(); ++j) out[j] += v[k] * src[j];
  }
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> v) {
  if (v.size() != a.cols()) {
    throw DimensionMismatch("matvec: " + std::to_string(a.cols()) +
                            " columns against vector of " +
                            std::to_string(v.size()));
  }
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto src = a.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) acc += src[k] * v[k];
    out[i] = acc;
  }
  return out;
}

std::vector<double> mean_rows(const Matrix& a) {
  std::vector<double> out(a.cols(), 0.0);
  if (a.rows() == 0) return out;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto src = a.row(r);
    for (std::size_t c = 0; c < a.cols(); ++c) out[c] += src[c];
  }
  for (double& x : out) x /= static_cast<double>(a.rows());
  return out;
}

}  // namespace vcm
