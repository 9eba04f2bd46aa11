#include "dkt/matrix.hpp"

#include <cmath>

namespace dkt {

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  }
  return out;
}

void add_matvec(Vector& out, const Matrix& w, const Vector& x) {
  if (w.cols() != x.size() || w.rows() != out.size()) {
    throw ShapeError("matvec: " + w.shape_str() + " against x[" + std::to_string(x.size()) +
                     "], out[" + std::to_string(out.size()) + "]");
  }
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  const double* xp = x.data();
  std::size_t r = 0;
  // Four rows at a time: independent accumulator chains keep the FPU busy
  // while each row's sum still runs left-to-right.
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w.row(r);
    const double* w1 = w.row(r + 1);
    const double* w2 = w.row(r + 2);
    const double* w3 = w.row(r + 3);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t k = 0; k < cols; ++k) {
      const double xk = xp[k];
      s0 += w0[k] * xk;
      s1 += w1[k] * xk;
      s2 += w2[k] * xk;
      s3 += w3[k] * xk;
    }
    out[r] += s0;
    out[r + 1] += s1;
    out[r + 2] += s2;
    out[r + 3] += s3;
  }
  for (; r < rows; ++r) {
    const double* wr = w.row(r);
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += wr[k] * xp[k];
    out[r] += s;
  }
}

Vector matvec(const Matrix& w, const Vector& x) {
  Vector out(w.rows(), 0.0);
  add_matvec(out, w, x);
  return out;
}

void add_matvec_transposed(Vector& out, const Matrix& w, const Vector& d) {
  if (w.rows() != d.size() || w.cols() != out.size()) {
    throw ShapeError("matvec_transposed: " + w.shape_str() + " against d[" +
                     std::to_string(d.size()) + "], out[" + std::to_string(out.size()) + "]");
  }
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double di = d[i];
    const double* wi = w.row(i);
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += wi[j] * di;
  }
}

void add_outer(Matrix& m, const Vector& a, const Vector& b) {
  if (m.rows() != a.size() || m.cols() != b.size()) {
    throw ShapeError("outer: " + m.shape_str() + " against a[" + std::to_string(a.size()) +
                     "] b[" + std::to_string(b.size()) + "]");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    double* mi = m.row(i);
    for (std::size_t j = 0; j < b.size(); ++j) mi[j] += ai * b[j];
  }
}

Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("glorot_init: zero dimension " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
  return m;
}

bool all_finite(std::span<const double> xs) {
  for (double v : xs) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace dkt
