// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "ntlgen/kernels/kernels.hpp"

namespace ntlgen::kernels::avx2 {

namespace {

template <class T>
struct Vec;

template <>
struct Vec<float> {
  using Reg = __m256;
  static constexpr std::size_t kLanes = 8;
  static Reg zero() { return _mm256_setzero_ps(); }
  static Reg set1(float x) { return _mm256_set1_ps(x); }
  static Reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, Reg r) { _mm256_storeu_ps(p, r); }
  static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_ps(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_ps(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_ps(a, b); }
  static Reg sub(Reg a, Reg b) { return _mm256_sub_ps(a, b); }
  static Reg div(Reg a, Reg b) { return _mm256_div_ps(a, b); }
  static Reg sqrt(Reg a) { return _mm256_sqrt_ps(a); }
};

template <>
struct Vec<double> {
  using Reg = __m256d;
  static constexpr std::size_t kLanes = 4;
  static Reg zero() { return _mm256_setzero_pd(); }
  static Reg set1(double x) { return _mm256_set1_pd(x); }
  static Reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, Reg r) { _mm256_storeu_pd(p, r); }
  static Reg fmadd(Reg a, Reg b, Reg c) { return _mm256_fmadd_pd(a, b, c); }
  static Reg add(Reg a, Reg b) { return _mm256_add_pd(a, b); }
  static Reg mul(Reg a, Reg b) { return _mm256_mul_pd(a, b); }
  static Reg sub(Reg a, Reg b) { return _mm256_sub_pd(a, b); }
  static Reg div(Reg a, Reg b) { return _mm256_div_pd(a, b); }
  static Reg sqrt(Reg a) { return _mm256_sqrt_pd(a); }
};

constexpr std::size_t kRowBlock = 4;
constexpr std::size_t kColPanel = 256;
constexpr std::size_t kDepthPanel = 256;

// Register tile: `rows` (<= 4) rows of C by two vector registers of columns.
template <class T, std::size_t Rows>
inline void tile_2v(bool trans_a, std::size_t i, std::size_t j, std::size_t p0, std::size_t p1,
                    std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
                    bool load_c) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  typename V::Reg acc[Rows][2];
  for (std::size_t r = 0; r < Rows; ++r) {
    acc[r][0] = load_c ? V::load(c + (i + r) * n + j) : V::zero();
    acc[r][1] = load_c ? V::load(c + (i + r) * n + j + L) : V::zero();
  }
  for (std::size_t p = p0; p < p1; ++p) {
    const auto b0 = V::load(b + p * n + j);
    const auto b1 = V::load(b + p * n + j + L);
    for (std::size_t r = 0; r < Rows; ++r) {
      const auto av = V::set1(trans_a ? a[p * m + i + r] : a[(i + r) * k + p]);
      acc[r][0] = V::fmadd(av, b0, acc[r][0]);
      acc[r][1] = V::fmadd(av, b1, acc[r][1]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    V::store(c + (i + r) * n + j, acc[r][0]);
    V::store(c + (i + r) * n + j + L, acc[r][1]);
  }
}

template <class T, std::size_t Rows>
inline void tile_1v(bool trans_a, std::size_t i, std::size_t j, std::size_t p0, std::size_t p1,
                    std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c,
                    bool load_c) {
  using V = Vec<T>;
  typename V::Reg acc[Rows];
  for (std::size_t r = 0; r < Rows; ++r) {
    acc[r] = load_c ? V::load(c + (i + r) * n + j) : V::zero();
  }
  for (std::size_t p = p0; p < p1; ++p) {
    const auto b0 = V::load(b + p * n + j);
    for (std::size_t r = 0; r < Rows; ++r) {
      const auto av = V::set1(trans_a ? a[p * m + i + r] : a[(i + r) * k + p]);
      acc[r] = V::fmadd(av, b0, acc[r]);
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) V::store(c + (i + r) * n + j, acc[r]);
}

template <class T, std::size_t Rows>
inline void tile_scalar(bool trans_a, std::size_t i, std::size_t j0, std::size_t j1,
                        std::size_t p0, std::size_t p1, std::size_t m, std::size_t n,
                        std::size_t k, const T* a, const T* b, T* c, bool load_c) {
  for (std::size_t r = 0; r < Rows; ++r) {
    for (std::size_t j = j0; j < j1; ++j) {
      T acc = load_c ? c[(i + r) * n + j] : T{0};
      for (std::size_t p = p0; p < p1; ++p) {
        const T av = trans_a ? a[p * m + i + r] : a[(i + r) * k + p];
        acc = std::fma(av, b[p * n + j], acc);
      }
      c[(i + r) * n + j] = acc;
    }
  }
}

template <class T, std::size_t Rows>
inline void row_block(bool trans_a, std::size_t i, std::size_t jc0, std::size_t jc1,
                      std::size_t p0, std::size_t p1, std::size_t m, std::size_t n,
                      std::size_t k, const T* a, const T* b, T* c, bool load_c) {
  constexpr std::size_t L = Vec<T>::kLanes;
  std::size_t j = jc0;
  for (; j + 2 * L <= jc1; j += 2 * L) tile_2v<T, Rows>(trans_a, i, j, p0, p1, m, n, k, a, b, c, load_c);
  for (; j + L <= jc1; j += L) tile_1v<T, Rows>(trans_a, i, j, p0, p1, m, n, k, a, b, c, load_c);
  if (j < jc1) tile_scalar<T, Rows>(trans_a, i, j, jc1, p0, p1, m, n, k, a, b, c, load_c);
}

}  // namespace

template <class T>
void gemm_rows(bool trans_a, std::size_t row_begin, std::size_t row_end, std::size_t m,
               std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = row_begin; i < row_end; ++i) std::fill_n(c + i * n, n, T{0});
    }
    return;
  }
  for (std::size_t jc = 0; jc < n; jc += kColPanel) {
    const std::size_t jc1 = std::min(n, jc + kColPanel);
    for (std::size_t pc = 0; pc < k; pc += kDepthPanel) {
      const std::size_t pc1 = std::min(k, pc + kDepthPanel);
      const bool load_c = accumulate || pc > 0;
      std::size_t i = row_begin;
      for (; i + kRowBlock <= row_end; i += kRowBlock) {
        row_block<T, 4>(trans_a, i, jc, jc1, pc, pc1, m, n, k, a, b, c, load_c);
      }
      for (; i < row_end; ++i) row_block<T, 1>(trans_a, i, jc, jc1, pc, pc1, m, n, k, a, b, c, load_c);
    }
  }
}

template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamCoeffs<T>& cf) {
  using V = Vec<T>;
  constexpr std::size_t L = V::kLanes;
  const auto b1 = V::set1(cf.beta1);
  const auto b2 = V::set1(cf.beta2);
  const auto omb1 = V::set1(T{1} - cf.beta1);
  const auto omb2 = V::set1(T{1} - cf.beta2);
  const auto bc1 = V::set1(cf.bias_correction1);
  const auto bc2 = V::set1(cf.bias_correction2);
  const auto lr = V::set1(cf.lr);
  const auto eps = V::set1(cf.eps);
  std::size_t i = 0;
  for (; i + L <= param.size(); i += L) {
    const auto g = V::load(grad.data() + i);
    // Same operation order as the scalar reference, without contraction.
    const auto mi = V::add(V::mul(b1, V::load(m.data() + i)), V::mul(omb1, g));
    const auto vi = V::add(V::mul(b2, V::load(v.data() + i)), V::mul(omb2, V::mul(g, g)));
    V::store(m.data() + i, mi);
    V::store(v.data() + i, vi);
    const auto step = V::div(V::mul(lr, V::div(mi, bc1)), V::add(V::sqrt(V::div(vi, bc2)), eps));
    V::store(param.data() + i, V::sub(V::load(param.data() + i), step));
  }
  if (i < param.size()) {
    scalar::adam_update<T>(param.subspan(i), grad.subspan(i), m.subspan(i), v.subspan(i), cf);
  }
}

double sum_squared_diff(std::span<const double> a, std::span<const double> b) {
  using V = Vec<double>;
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 8 <= a.size(); i += 8) {
    const auto d0 = V::sub(V::load(a.data() + i), V::load(b.data() + i));
    const auto d1 = V::sub(V::load(a.data() + i + 4), V::load(b.data() + i + 4));
    acc0 = V::fmadd(d0, d0, acc0);
    acc1 = V::fmadd(d1, d1, acc1);
  }
  alignas(32) double lanes[4];
  V::store(lanes, V::add(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  using V = Vec<double>;
  const auto sign_mask = _mm256_set1_pd(-0.0);
  auto acc0 = V::zero();
  auto acc1 = V::zero();
  std::size_t i = 0;
  for (; i + 8 <= a.size(); i += 8) {
    const auto d0 = V::sub(V::load(a.data() + i), V::load(b.data() + i));
    const auto d1 = V::sub(V::load(a.data() + i + 4), V::load(b.data() + i + 4));
    acc0 = V::add(acc0, _mm256_andnot_pd(sign_mask, d0));
    acc1 = V::add(acc1, _mm256_andnot_pd(sign_mask, d1));
  }
  alignas(32) double lanes[4];
  V::store(lanes, V::add(acc0, acc1));
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

template void gemm_rows<float>(bool, std::size_t, std::size_t, std::size_t, std::size_t,
                               std::size_t, const float*, const float*, float*, bool);
template void gemm_rows<double>(bool, std::size_t, std::size_t, std::size_t, std::size_t,
                                std::size_t, const double*, const double*, double*, bool);
template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>,
                                 std::span<float>, const AdamCoeffs<float>&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>,
                                  std::span<double>, const AdamCoeffs<double>&);

}  // namespace ntlgen::kernels::avx2
