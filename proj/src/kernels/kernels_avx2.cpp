#include "dpfed/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

// Each function carries its own target attribute so this translation unit
// can be built without -mavx2; nothing here may run unless the dispatcher
// has confirmed CPU support.
#define DPFED_AVX2 __attribute__((target("avx2,fma")))

namespace dpfed::kernels {
namespace {

DPFED_AVX2 void add_avx2(const double* a, const double* b, double* out,
                         std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

DPFED_AVX2 void sub_avx2(const double* a, const double* b, double* out,
                         std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

// No FMA here: the product is rounded before the sum, matching the scalar
// reference bit for bit.
DPFED_AVX2 void axpy_avx2(double alpha, const double* x, double* y,
                          std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) {
    const double prod = alpha * x[i];
    y[i] = y[i] + prod;
  }
}

DPFED_AVX2 void scale_avx2(double alpha, double* x, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] = alpha * x[i];
}

DPFED_AVX2 void divide_avx2(double* x, double d, std::size_t n) {
  const __m256d vd = _mm256_set1_pd(d);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_div_pd(_mm256_loadu_pd(x + i), vd));
  }
  for (; i < n; ++i) x[i] = x[i] / d;
}

DPFED_AVX2 double sum_squares_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d v0 = _mm256_loadu_pd(x + i);
    const __m256d v1 = _mm256_loadu_pd(x + i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

DPFED_AVX2 void dd_accumulate_avx2(double* hi, double* lo, const double* x,
                                   std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d h = _mm256_loadu_pd(hi + i);
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d s = _mm256_add_pd(h, v);
    const __m256d bb = _mm256_sub_pd(s, h);
    const __m256d err =
        _mm256_add_pd(_mm256_sub_pd(h, _mm256_sub_pd(s, bb)), _mm256_sub_pd(v, bb));
    _mm256_storeu_pd(hi + i, s);
    _mm256_storeu_pd(lo + i, _mm256_add_pd(_mm256_loadu_pd(lo + i), err));
  }
  for (; i < n; ++i) {
    const double s = hi[i] + x[i];
    const double bb = s - hi[i];
    const double err = (hi[i] - (s - bb)) + (x[i] - bb);
    hi[i] = s;
    lo[i] = lo[i] + err;
  }
}

DPFED_AVX2 void dd_divide_avx2(const double* hi, const double* lo, double d, double* out,
                               std::size_t n) {
  const __m256d vd = _mm256_set1_pd(d);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d h = _mm256_loadu_pd(hi + i);
    const __m256d q = _mm256_div_pd(h, vd);
    const __m256d residual =
        _mm256_add_pd(_mm256_fnmadd_pd(q, vd, h), _mm256_loadu_pd(lo + i));
    _mm256_storeu_pd(out + i, _mm256_add_pd(q, _mm256_div_pd(residual, vd)));
  }
  for (; i < n; ++i) {
    const double q = hi[i] / d;
    const double residual = __builtin_fma(-q, d, hi[i]) + lo[i];
    out[i] = q + residual / d;
  }
}

// Register-blocked update of an R x (4*V) tile of C:
//   C(r, j) += sum_p A(r, p) * B(p, j),  p = 0 .. len-1
// A(r, p) lives at a[r * a_rs + p * a_ps], B(p, j) at b[p * ldb + j] and
// C(r, j) at c[r * ldc + j]. The same tile serves both GEMM orientations.
template <int R, int V>
DPFED_AVX2 inline void tile(std::size_t len, const double* a, std::size_t a_rs,
                            std::size_t a_ps, const double* b, std::size_t ldb,
                            double* c, std::size_t ldc) {
  __m256d acc[R][V];
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < V; ++v) acc[r][v] = _mm256_loadu_pd(c + r * ldc + 4 * v);
  for (std::size_t p = 0; p < len; ++p) {
    __m256d bv[V];
    for (int v = 0; v < V; ++v) bv[v] = _mm256_loadu_pd(b + p * ldb + 4 * v);
    for (int r = 0; r < R; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * a_rs + p * a_ps);
      for (int v = 0; v < V; ++v) acc[r][v] = _mm256_fmadd_pd(av, bv[v], acc[r][v]);
    }
  }
  for (int r = 0; r < R; ++r)
    for (int v = 0; v < V; ++v) _mm256_storeu_pd(c + r * ldc + 4 * v, acc[r][v]);
}

template <int V>
DPFED_AVX2 void column_panel(std::size_t rows, std::size_t len, const double* a,
                             std::size_t a_rs, std::size_t a_ps, const double* b,
                             std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t r = 0;
  for (; r + 6 <= rows; r += 6)
    tile<6, V>(len, a + r * a_rs, a_rs, a_ps, b, ldb, c + r * ldc, ldc);
  for (; r + 4 <= rows; r += 4)
    tile<4, V>(len, a + r * a_rs, a_rs, a_ps, b, ldb, c + r * ldc, ldc);
  for (; r < rows; ++r)
    tile<1, V>(len, a + r * a_rs, a_rs, a_ps, b, ldb, c + r * ldc, ldc);
}

DPFED_AVX2 void gemm_block(std::size_t rows, std::size_t cols, std::size_t len,
                           const double* a, std::size_t a_rs, std::size_t a_ps,
                           const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  std::size_t j = 0;
  for (; j + 8 <= cols; j += 8)
    column_panel<2>(rows, len, a, a_rs, a_ps, b + j, ldb, c + j, ldc);
  for (; j + 4 <= cols; j += 4)
    column_panel<1>(rows, len, a, a_rs, a_ps, b + j, ldb, c + j, ldc);
  for (; j < cols; ++j) {
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = c[r * ldc + j];
      for (std::size_t p = 0; p < len; ++p)
        acc = __builtin_fma(a[r * a_rs + p * a_ps], b[p * ldb + j], acc);
      c[r * ldc + j] = acc;
    }
  }
}

// Splits the reduction dimension into chunks so the active slices of A and
// B stay cache resident.
DPFED_AVX2 void gemm_generic(std::size_t rows, std::size_t cols, std::size_t len,
                             const double* a, std::size_t a_rs, std::size_t a_ps,
                             const double* b, double* c) {
  constexpr std::size_t kChunk = 128;
  for (std::size_t p = 0; p < len; p += kChunk) {
    const std::size_t n = std::min(kChunk, len - p);
    gemm_block(rows, cols, n, a + p * a_ps, a_rs, a_ps, b + p * cols, cols, c, cols);
  }
}

DPFED_AVX2 void gemm_nn_avx2(std::size_t m, std::size_t n, std::size_t k,
                             const double* a, const double* b, double* c) {
  gemm_generic(m, n, k, a, k, 1, b, c);
}

DPFED_AVX2 void gemm_tn_avx2(std::size_t m, std::size_t n, std::size_t k,
                             const double* a, const double* b, double* c) {
  gemm_generic(k, n, m, a, 1, k, b, c);
}

constexpr KernelTable kAvx2Table{
    add_avx2,         sub_avx2,         axpy_avx2,      scale_avx2,
    divide_avx2,      sum_squares_avx2, dd_accumulate_avx2,
    dd_divide_avx2,   gemm_nn_avx2,     gemm_tn_avx2,
};

}  // namespace

const KernelTable& avx2_table() { return kAvx2Table; }

}  // namespace dpfed::kernels

#endif
