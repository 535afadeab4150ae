#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace patchhar {

// Dense row-major matrix. Everything in this codebase is small (tokens x dim),
// so plain triple loops are fast enough and easy to audit.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(int r, int c, T fill = T(0))
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  T& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

  std::size_t size() const { return v.size(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
  Mat<T> out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const T aik = a(i, k);
      for (int j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

// a^T * b, shape (a.cols x b.cols).
template <typename T>
Mat<T> matmul_tn(const Mat<T>& a, const Mat<T>& b) {
  if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: row counts differ");
  Mat<T> out(a.cols, b.cols);
  for (int r = 0; r < a.rows; ++r) {
    for (int i = 0; i < a.cols; ++i) {
      const T ari = a(r, i);
      for (int j = 0; j < b.cols; ++j) out(i, j) += ari * b(r, j);
    }
  }
  return out;
}

// a * b^T, shape (a.rows x b.rows).
template <typename T>
Mat<T> matmul_nt(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: column counts differ");
  Mat<T> out(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.rows; ++j) {
      T acc = T(0);
      for (int k = 0; k < a.cols; ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  }
  return out;
}

template <typename T>
void add_inplace(Mat<T>& dst, const Mat<T>& src) {
  if (!dst.same_shape(src)) throw std::invalid_argument("add_inplace: shape mismatch");
  for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

template <typename T>
void scale_inplace(Mat<T>& m, T s) {
  for (T& x : m.v) x *= s;
}

template <typename T>
std::vector<T> col_sums(const Mat<T>& m) {
  std::vector<T> out(static_cast<std::size_t>(m.cols), T(0));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c) out[c] += m(r, c);
  return out;
}

template <typename T>
bool all_finite(const Mat<T>& m) {
  for (const T& x : m.v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (const T& x : v)
    if (!std::isfinite(static_cast<double>(x))) return false;
  return true;
}

template <typename T>
T max_abs(const Mat<T>& m) {
  T best = T(0);
  for (const T& x : m.v) best = std::max(best, static_cast<T>(std::abs(static_cast<double>(x))));
  return best;
}

}  // namespace patchhar
