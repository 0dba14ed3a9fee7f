#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace transcad::nn {

// Dense row-major 2D tensor of 64-bit floats. Everything the model needs is
// expressible as [rows x cols]; vectors are [1 x n] or [n x 1].
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }

  static Tensor full(std::size_t r, std::size_t c, double v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor row(const std::vector<double>& v) {
    Tensor t(1, v.size());
    t.data = v;
    return t;
  }

  std::size_t size() const { return data.size(); }

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void check_shape(std::size_t r, std::size_t c, const char* what) const {
    if (rows != r || cols != c) throw std::invalid_argument(std::string(what) + ": shape mismatch");
  }

  bool operator==(const Tensor&) const = default;
};

inline void axpy(Tensor& y, double a, const Tensor& x) {
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += a * x.data[i];
}

// C += A * B, straightforward ikj loop; fast enough for desk-scale shapes.
inline void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A^T * B
inline void matmul_at_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = &a.data[k * a.cols];
    const double* brow = &b.data[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

// C += A * B^T
inline void matmul_bt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = &b.data[j * b.cols];
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] += s;
    }
  }
}

}  // namespace transcad::nn
