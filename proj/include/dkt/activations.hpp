#pragma once

#include <cmath>

#include "dkt/matrix.hpp"

namespace dkt {

// Branch form keeps every exp() argument nonpositive, so large |x|
// saturates instead of overflowing.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void sigmoid_inplace(Vector& xs) {
  for (double& v : xs) v = sigmoid(v);
}

inline void tanh_inplace(Vector& xs) {
  for (double& v : xs) v = std::tanh(v);
}

inline Vector sigmoid(const Vector& xs) {
  Vector out = xs;
  sigmoid_inplace(out);
  return out;
}

inline Vector tanh(const Vector& xs) {
  Vector out = xs;
  tanh_inplace(out);
  return out;
}

inline Matrix sigmoid(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = sigmoid(v);
  return out;
}

inline Matrix tanh(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::tanh(v);
  return out;
}

}  // namespace dkt
