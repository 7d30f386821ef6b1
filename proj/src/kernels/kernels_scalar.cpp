#include "dpfed/kernels.hpp"

#include <cmath>

namespace dpfed::kernels {
namespace {

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

void divide_scalar(double* x, double d, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] / d;
}

double sum_squares_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void dd_accumulate_scalar(double* hi, double* lo, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = hi[i] + x[i];
    const double bb = s - hi[i];
    const double err = (hi[i] - (s - bb)) + (x[i] - bb);
    hi[i] = s;
    lo[i] = lo[i] + err;
  }
}

void dd_divide_scalar(const double* hi, const double* lo, double d, double* out,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double q = hi[i] / d;
    const double residual = std::fma(-q, d, hi[i]) + lo[i];
    out[i] = q + residual / d;
  }
}

void gemm_nn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_tn_scalar(std::size_t m, std::size_t n, std::size_t k,
                    const double* a, const double* b, double* c) {
  for (std::size_t p = 0; p < m; ++p) {
    const double* arow = a + p * k;
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double av = arow[i];
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

constexpr KernelTable kScalarTable{
    add_scalar,           sub_scalar,       axpy_scalar,    scale_scalar,
    divide_scalar,        sum_squares_scalar, dd_accumulate_scalar,
    dd_divide_scalar,     gemm_nn_scalar,   gemm_tn_scalar,
};

}  // namespace

const KernelTable& scalar_table() { return kScalarTable; }

}  // namespace dpfed::kernels
