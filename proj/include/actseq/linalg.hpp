#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace actseq {

using Vector = std::vector<double>;

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  Vector data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }

  Vector row(std::size_t r) const {
    return Vector(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
                  data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
  }
};

inline bool all_finite(const Vector& v) {
  for (const double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_finite(const Vector& v, const std::string& what) {
  if (!all_finite(v)) throw std::invalid_argument(what + ": non-finite entry");
}

// y = M x
inline Vector matvec(const Matrix& m, const Vector& x) {
  if (x.size() != m.cols) throw std::invalid_argument("matvec: dimension mismatch");
  Vector y(m.rows, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double acc = 0.0;
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// y += M^T x
inline void matvec_transpose_acc(const Matrix& m, const Vector& x, Vector& y) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    const double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += row[c] * xr;
  }
}

// M += a b^T
inline void outer_acc(const Vector& a, const Vector& b, Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double ar = a[r];
    double* row = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) row[c] += ar * b[c];
  }
}

inline void axpy(double alpha, const Vector& x, Vector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// Rows [r0, r1) as a new matrix.
inline Matrix slice_rows(const Matrix& m, std::size_t r0, std::size_t r1) {
  Matrix out(r1 - r0, m.cols);
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(r - r0, c) = m(r, c);
  }
  return out;
}

}  // namespace actseq
