#include <atomic>
#include <cstdlib>
#include <string>

#include "dpfed/error.hpp"
#include "dpfed/kernels.hpp"

namespace dpfed::kernels {
namespace {

Backend best_supported() {
  if (backend_supported(Backend::kAvx2)) return Backend::kAvx2;
  return Backend::kScalar;
}

Backend initial_backend() {
  if (const char* env = std::getenv("DPFED_KERNELS"); env && *env) {
    const Backend requested = parse_backend(env);
    if (backend_supported(requested)) return requested;
  }
  return best_supported();
}

std::atomic<Backend>& active_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

void require_same(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw LayoutError(std::string(op) + ": length mismatch (" + std::to_string(a) +
                      " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

std::string_view backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  throw ValidationError("unknown kernel backend '" + std::string(name) + "'");
}

const KernelTable& table(Backend b) {
  if (!backend_supported(b)) {
    throw ValidationError("kernel backend '" + std::string(backend_name(b)) +
                          "' is not supported on this CPU");
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (b == Backend::kAvx2) return avx2_table();
#endif
  return scalar_table();
}

Backend active_backend() { return active_slot().load(std::memory_order_relaxed); }

void set_active_backend(Backend b) {
  if (!backend_supported(b)) {
    throw ValidationError("kernel backend '" + std::string(backend_name(b)) +
                          "' is not supported on this CPU");
  }
  active_slot().store(b, std::memory_order_relaxed);
}

const KernelTable& active() { return table(active_backend()); }

void add(std::span<const double> a, std::span<const double> b,
         std::span<double> out) {
  require_same(a.size(), b.size(), "add");
  require_same(a.size(), out.size(), "add");
  active().add(a.data(), b.data(), out.data(), a.size());
}

void sub(std::span<const double> a, std::span<const double> b,
         std::span<double> out) {
  require_same(a.size(), b.size(), "sub");
  require_same(a.size(), out.size(), "sub");
  active().sub(a.data(), b.data(), out.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require_same(x.size(), y.size(), "axpy");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

void divide(std::span<double> x, double d) {
  active().divide(x.data(), d, x.size());
}

double sum_squares(std::span<const double> x) {
  return active().sum_squares(x.data(), x.size());
}

}  // namespace dpfed::kernels
