#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <vector>

#include "ntlgen/kernels/kernels.hpp"
#include "oracles.hpp"

namespace kn = ntlgen::kernels;

namespace {

template <class T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return v;
}

template <class T>
void check_gemm_against_oracle(kn::Isa isa, double tol) {
  std::mt19937_64 rng(11);
  const std::size_t dims[][3] = {{1, 1, 1},   {3, 5, 7},    {4, 16, 9},  {5, 17, 33},
                                 {13, 40, 3}, {64, 300, 70}, {7, 9, 600}, {33, 257, 260}};
  for (bool trans_a : {false, true}) {
    for (const auto& d : dims) {
      const std::size_t m = d[0], n = d[1], k = d[2];
      const auto a = random_vec<T>(m * k, rng);
      const auto b = random_vec<T>(k * n, rng);
      auto c = random_vec<T>(m * n, rng);
      const auto c0 = c;
      const auto expect = oracle::matmul<T>(trans_a, m, n, k, a, b);
      kn::gemm<T>(isa, trans_a, m, n, k, a.data(), b.data(), c.data(), false);
      for (std::size_t i = 0; i < c.size(); ++i) {
        ASSERT_NEAR(c[i], expect[i], tol * static_cast<double>(k)) << "m=" << m << " n=" << n << " k=" << k;
      }
      c = c0;
      kn::gemm<T>(isa, trans_a, m, n, k, a.data(), b.data(), c.data(), true);
      for (std::size_t i = 0; i < c.size(); ++i) {
        ASSERT_NEAR(c[i], c0[i] + expect[i], tol * static_cast<double>(k + 1));
      }
    }
  }
}

}  // namespace

TEST(Gemm, ScalarMatchesOracle) {
  check_gemm_against_oracle<double>(kn::Isa::kScalar, 1e-15);
  check_gemm_against_oracle<float>(kn::Isa::kScalar, 1e-6);
}

TEST(Gemm, Avx2MatchesOracle) {
  if (kn::detected_isa() != kn::Isa::kAvx2) GTEST_SKIP() << "no AVX2 on this CPU";
  check_gemm_against_oracle<double>(kn::Isa::kAvx2, 1e-15);
  check_gemm_against_oracle<float>(kn::Isa::kAvx2, 1e-6);
}

TEST(Gemm, Avx2AgreesWithScalar) {
  if (kn::detected_isa() != kn::Isa::kAvx2) GTEST_SKIP() << "no AVX2 on this CPU";
  std::mt19937_64 rng(5);
  const std::size_t m = 37, n = 301, k = 129;
  const auto a = random_vec<double>(m * k, rng);
  const auto b = random_vec<double>(k * n, rng);
  std::vector<double> cs(m * n), cv(m * n);
  kn::gemm<double>(kn::Isa::kScalar, false, m, n, k, a.data(), b.data(), cs.data(), false);
  kn::gemm<double>(kn::Isa::kAvx2, false, m, n, k, a.data(), b.data(), cv.data(), false);
  for (std::size_t i = 0; i < cs.size(); ++i) ASSERT_NEAR(cs[i], cv[i], 1e-12);
}

TEST(Gemm, BitwiseIndependentOfThreadCount) {
  std::mt19937_64 rng(9);
  const std::size_t m = 96, n = 512, k = 256;
  const auto a = random_vec<float>(m * k, rng);
  const auto b = random_vec<float>(k * n, rng);
  std::vector<float> c1(m * n), c4(m * n);
  setenv("NTLGEN_THREADS", "1", 1);
  kn::gemm<float>(false, m, n, k, a.data(), b.data(), c1.data(), false);
  setenv("NTLGEN_THREADS", "4", 1);
  kn::gemm<float>(false, m, n, k, a.data(), b.data(), c4.data(), false);
  unsetenv("NTLGEN_THREADS");
  EXPECT_EQ(c1, c4);
}

TEST(Adam, Avx2AgreesWithScalar) {
  if (kn::detected_isa() != kn::Isa::kAvx2) GTEST_SKIP() << "no AVX2 on this CPU";
  std::mt19937_64 rng(3);
  const std::size_t n = 1027;
  const auto grad = random_vec<float>(n, rng);
  auto p1 = random_vec<float>(n, rng);
  auto m1 = random_vec<float>(n, rng);
  auto v1 = random_vec<float>(n, rng);
  for (auto& v : v1) v = std::abs(v);
  auto p2 = p1, m2 = m1, v2 = v1;
  const kn::AdamCoeffs<float> cf{2e-4f, 0.5f, 0.999f, 1e-8f, 0.75f, 0.002f};
  kn::adam_update<float>(kn::Isa::kScalar, p1, grad, m1, v1, cf);
  kn::adam_update<float>(kn::Isa::kAvx2, p2, grad, m2, v2, cf);
  // Same operation order and IEEE-exact sqrt/div: results agree bitwise.
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(m1, m2);
  EXPECT_EQ(v1, v2);
}

TEST(Reductions, Avx2AgreesWithScalar) {
  std::mt19937_64 rng(4);
  for (std::size_t n : {1u, 7u, 8u, 65u, 4096u}) {
    const auto a = random_vec<double>(n, rng);
    const auto b = random_vec<double>(n, rng);
    const double ss = kn::sum_squared_diff(kn::Isa::kScalar, a, b);
    const double sa = kn::sum_abs_diff(kn::Isa::kScalar, a, b);
    EXPECT_NEAR(kn::sum_squared_diff(kn::Isa::kAvx2, a, b), ss, 1e-12 * (1 + ss));
    EXPECT_NEAR(kn::sum_abs_diff(kn::Isa::kAvx2, a, b), sa, 1e-12 * (1 + sa));
  }
}

TEST(Dispatch, ScalarOverrideIsNamed) {
  EXPECT_EQ(kn::isa_name(kn::Isa::kScalar), "scalar");
  EXPECT_EQ(kn::isa_name(kn::Isa::kAvx2), "avx2");
}
