// Small dense vector/matrix helpers shared by all modules.
// Doubles everywhere: the networks are tiny and gradient checks matter
// more than speed.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dnada {

using Vec = std::vector<double>;

struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  const double* row_ptr(std::size_t r) const { return a.data() + r * cols; }
  double* row_ptr(std::size_t r) { return a.data() + r * cols; }

  Vec row_copy(std::size_t r) const {
    return Vec(row_ptr(r), row_ptr(r) + cols);
  }
};

inline void check_same_dim(const Vec& a, const Vec& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

// y = W x + b
inline Vec affine(const Mat& w, const Vec& b, const Vec& x) {
  if (w.cols != x.size()) throw std::invalid_argument("affine: dimension mismatch");
  Vec y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row_ptr(r);
    double acc = b[r];
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// x += Wᵀ g, the backward map of affine()
inline void add_transpose_apply(const Mat& w, const Vec& g, Vec& x) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row_ptr(r);
    const double gr = g[r];
    for (std::size_t c = 0; c < w.cols; ++c) x[c] += wr[c] * gr;
  }
}

inline void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline Vec scaled(const Vec& x, double a) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
  return y;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double squared_norm(const Vec& a) { return dot(a, a); }

inline Vec concat(const Vec& a, const Vec& b) {
  Vec out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace dnada
