#pragma once

// Data-parallel inner loops used by the model, the DP layer and the
// aggregator. Every kernel has a portable scalar reference and, on x86-64,
// an AVX2+FMA variant selected at runtime.
//
// Elementwise kernels (add, sub, axpy, scale, divide, dd_*) are bit-identical
// across backends: the vector paths use the same single-rounding operations
// as the scalar loops. Reductions (sum_squares) and the GEMM kernels reorder
// or fuse arithmetic and agree with the scalar reference only to within
// rounding. Within one backend every kernel is deterministic.

#include <cstddef>
#include <span>
#include <string_view>

namespace dpfed::kernels {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  // out = a + b
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  // out = a - b
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  // y = y + alpha * x, computed as a rounded product followed by a rounded sum
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // x = alpha * x
  void (*scale)(double alpha, double* x, std::size_t n);
  // x = x / d (true division, not multiplication by 1/d)
  void (*divide)(double* x, double d, std::size_t n);
  double (*sum_squares)(const double* x, std::size_t n);
  // Compensated accumulation: (hi, lo) += x, with hi + lo carrying the
  // running sum as an unevaluated double-double (TwoSum per element).
  void (*dd_accumulate)(double* hi, double* lo, const double* x, std::size_t n);
  // out = (hi + lo) / d, with the division residual recovered by an exact
  // FMA so the quotient is (almost always) correctly rounded.
  void (*dd_divide)(const double* hi, const double* lo, double d, double* out,
                    std::size_t n);
  // C[m x n] += A[m x k] * B[k x n], all row-major
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[k x n] += A[m x k]^T * B[m x n], all row-major
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
};

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool backend_supported(Backend b);
std::string_view backend_name(Backend b);
/// Parses "scalar" or "avx2"; throws ValidationError otherwise.
Backend parse_backend(std::string_view name);

const KernelTable& table(Backend b);

/// The process-wide backend. Defaults to the best supported one; the
/// DPFED_KERNELS environment variable ("scalar" | "avx2") overrides it.
Backend active_backend();
/// Throws ValidationError when `b` is not supported on this CPU.
void set_active_backend(Backend b);
const KernelTable& active();

// Span wrappers over the active backend. Length mismatches throw LayoutError.
void add(std::span<const double> a, std::span<const double> b,
         std::span<double> out);
void sub(std::span<const double> a, std::span<const double> b,
         std::span<double> out);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void scale(double alpha, std::span<double> x);
void divide(std::span<double> x, double d);
double sum_squares(std::span<const double> x);

}  // namespace dpfed::kernels
