#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dpfed/error.hpp"
#include "dpfed/kernels.hpp"

namespace dpfed::kernels {
namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

std::vector<Backend> vector_backends() {
  std::vector<Backend> out;
  if (backend_supported(Backend::kAvx2)) out.push_back(Backend::kAvx2);
  return out;
}

TEST(Kernels, ScalarIsAlwaysSupported) {
  EXPECT_TRUE(backend_supported(Backend::kScalar));
  EXPECT_EQ(backend_name(Backend::kScalar), "scalar");
  EXPECT_EQ(parse_backend("avx2"), Backend::kAvx2);
  EXPECT_THROW(parse_backend("neon"), ValidationError);
}

TEST(Kernels, ElementwiseKernelsAreBitIdenticalAcrossBackends) {
  const auto& ref = scalar_table();
  for (Backend b : vector_backends()) {
    const auto& vec = table(b);
    for (std::size_t n = 0; n < 40; ++n) {
      const auto a = random_vector(n, 1 + n);
      const auto c = random_vector(n, 100 + n);
      std::vector<double> r1(n), r2(n);

      ref.add(a.data(), c.data(), r1.data(), n);
      vec.add(a.data(), c.data(), r2.data(), n);
      EXPECT_EQ(r1, r2) << "add n=" << n;

      ref.sub(a.data(), c.data(), r1.data(), n);
      vec.sub(a.data(), c.data(), r2.data(), n);
      EXPECT_EQ(r1, r2) << "sub n=" << n;

      r1 = c;
      r2 = c;
      ref.axpy(-0.0046, a.data(), r1.data(), n);
      vec.axpy(-0.0046, a.data(), r2.data(), n);
      EXPECT_EQ(r1, r2) << "axpy n=" << n;

      r1 = a;
      r2 = a;
      ref.scale(0.37, r1.data(), n);
      vec.scale(0.37, r2.data(), n);
      EXPECT_EQ(r1, r2) << "scale n=" << n;

      r1 = a;
      r2 = a;
      ref.divide(r1.data(), 3.0, n);
      vec.divide(r2.data(), 3.0, n);
      EXPECT_EQ(r1, r2) << "divide n=" << n;
    }
  }
}

TEST(Kernels, CompensatedKernelsAreBitIdenticalAcrossBackends) {
  const auto& ref = scalar_table();
  for (Backend b : vector_backends()) {
    const auto& vec = table(b);
    for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 33u, 101u}) {
      std::vector<double> h1(n, 0.0), l1(n, 0.0), h2(n, 0.0), l2(n, 0.0);
      for (std::uint64_t s = 0; s < 9; ++s) {
        const auto x = random_vector(n, 7 * s + n, std::pow(10.0, static_cast<double>(s % 5)));
        ref.dd_accumulate(h1.data(), l1.data(), x.data(), n);
        vec.dd_accumulate(h2.data(), l2.data(), x.data(), n);
      }
      EXPECT_EQ(h1, h2);
      EXPECT_EQ(l1, l2);
      std::vector<double> o1(n), o2(n);
      ref.dd_divide(h1.data(), l1.data(), 9.0, o1.data(), n);
      vec.dd_divide(h2.data(), l2.data(), 9.0, o2.data(), n);
      EXPECT_EQ(o1, o2);
    }
  }
}

TEST(Kernels, SumSquaresAgreesWithinRounding) {
  for (Backend b : vector_backends()) {
    for (std::size_t n : {0u, 1u, 5u, 16u, 19973u}) {
      const auto a = random_vector(n, n + 3);
      const double r = scalar_table().sum_squares(a.data(), n);
      const double v = table(b).sum_squares(a.data(), n);
      EXPECT_NEAR(v, r, 1e-13 * std::max(1.0, r)) << "n=" << n;
    }
  }
}

struct GemmShape {
  std::size_t m, n, k;
};

TEST(Kernels, GemmMatchesScalarReferenceWithinRounding) {
  const std::vector<GemmShape> shapes{{1, 1, 1},    {7, 13, 5},    {6, 8, 3},   {12, 4, 9},
                                      {33, 17, 21}, {64, 128, 21}, {5, 5, 300}, {130, 5, 128}};
  for (Backend b : vector_backends()) {
    for (const auto& s : shapes) {
      const auto a = random_vector(s.m * s.k, s.m + 10 * s.k);
      const auto bm = random_vector(s.k * s.n, s.n + 7);
      const auto c0 = random_vector(s.m * s.n, 99);
      auto r = c0, v = c0;
      scalar_table().gemm_nn(s.m, s.n, s.k, a.data(), bm.data(), r.data());
      table(b).gemm_nn(s.m, s.n, s.k, a.data(), bm.data(), v.data());
      for (std::size_t i = 0; i < r.size(); ++i) {
        ASSERT_NEAR(v[i], r[i], 1e-12 * static_cast<double>(s.k)) << "nn " << s.m << "x" << s.n;
      }

      // gemm_tn: C[k x n] += A[m x k]^T B[m x n]
      const auto bt = random_vector(s.m * s.n, s.n + 11);
      const auto ct = random_vector(s.k * s.n, 5);
      auto rt = ct, vt = ct;
      scalar_table().gemm_tn(s.m, s.n, s.k, a.data(), bt.data(), rt.data());
      table(b).gemm_tn(s.m, s.n, s.k, a.data(), bt.data(), vt.data());
      for (std::size_t i = 0; i < rt.size(); ++i) {
        ASSERT_NEAR(vt[i], rt[i], 1e-12 * static_cast<double>(s.m)) << "tn " << s.m;
      }
    }
  }
}

TEST(Kernels, ScalarGemmMatchesNaiveTripleLoop) {
  const std::size_t m = 3, n = 4, k = 2;
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  const std::vector<double> b{1, 0, -1, 2, 0.5, 1, 1, -1};
  std::vector<double> c(m * n, 1.0);
  scalar_table().gemm_nn(m, n, k, a.data(), b.data(), c.data());
  const std::vector<double> expect{3, 3, 2, 1, 6, 5, 2, 3, 9, 7, 2, 5};
  EXPECT_EQ(c, expect);

  std::vector<double> ct(k * n, 0.0);
  const std::vector<double> bt{1, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 2};
  scalar_table().gemm_tn(m, n, k, a.data(), bt.data(), ct.data());
  // A^T = [[1,3,5],[2,4,6]]
  const std::vector<double> expect_t{4, 3, 3, 14, 6, 4, 4, 18};
  EXPECT_EQ(ct, expect_t);
}

TEST(Kernels, SpanWrappersRejectLengthMismatch) {
  std::vector<double> a(3), b(4), out(3);
  EXPECT_THROW(add(a, b, out), LayoutError);
  EXPECT_THROW(sub(a, b, out), LayoutError);
  EXPECT_THROW(axpy(1.0, a, b), LayoutError);
}

TEST(Kernels, ActiveBackendCanBeSwitched) {
  const Backend before = active_backend();
  set_active_backend(Backend::kScalar);
  EXPECT_EQ(active_backend(), Backend::kScalar);
  EXPECT_EQ(&active(), &scalar_table());
  set_active_backend(before);
}

}  // namespace
}  // namespace dpfed::kernels
