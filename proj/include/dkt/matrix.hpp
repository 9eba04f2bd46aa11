#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dkt/error.hpp"
#include "dkt/rng.hpp"

namespace dkt {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles. The only tensor abstraction used by
// this project.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// Standard product. Each output entry sums over k left-to-right so results
// are reproducible bit-for-bit.
Matrix matmul(const Matrix& a, const Matrix& b);

// out += w * x
void add_matvec(Vector& out, const Matrix& w, const Vector& x);
Vector matvec(const Matrix& w, const Vector& x);

// out += w^T * d
void add_matvec_transposed(Vector& out, const Matrix& w, const Vector& d);

// m += a * b^T
void add_outer(Matrix& m, const Vector& a, const Vector& b);

// Entries uniform in +-sqrt(6 / (rows + cols)), filled row-major.
Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

bool all_finite(std::span<const double> xs);

}  // namespace dkt
