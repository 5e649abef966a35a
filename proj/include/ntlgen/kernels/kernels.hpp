#pragma once

// Data-parallel inner loops. Every kernel has a portable scalar reference in
// ntlgen::kernels::scalar and, on x86-64, an AVX2+FMA variant in
// ntlgen::kernels::avx2. The un-namespaced entry points dispatch on the
// instruction set selected once at startup (see active_isa()).

#include <cstddef>
#include <span>
#include <string_view>

namespace ntlgen::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

// Best instruction set the running CPU and this build support.
Isa detected_isa();

// detected_isa(), unless NTLGEN_ISA=scalar forces the reference kernels.
Isa active_isa();

template <class T>
struct AdamCoeffs {
  T lr;
  T beta1;
  T beta2;
  T eps;
  T bias_correction1;  // 1 - beta1^t
  T bias_correction2;  // 1 - beta2^t
};

// C (m x n) = op(A) * B, row-major, where op(A) is A stored m x k, or A^T
// with A stored k x m when `trans_a` is set. B is k x n. With `accumulate`
// the product is added onto the existing contents of C.
template <class T>
void gemm(Isa isa, bool trans_a, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c, bool accumulate);

template <class T>
void gemm(bool trans_a, std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b,
          T* c, bool accumulate) {
  gemm<T>(active_isa(), trans_a, m, n, k, a, b, c, accumulate);
}

// In-place bias-corrected Adam update over one parameter tensor.
template <class T>
void adam_update(Isa isa, std::span<T> param, std::span<const T> grad, std::span<T> m,
                 std::span<T> v, const AdamCoeffs<T>& coeffs);

template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamCoeffs<T>& coeffs) {
  adam_update<T>(active_isa(), param, grad, m, v, coeffs);
}

// Reductions used by the image metrics.
double sum_squared_diff(Isa isa, std::span<const double> a, std::span<const double> b);
double sum_abs_diff(Isa isa, std::span<const double> a, std::span<const double> b);
inline double sum_squared_diff(std::span<const double> a, std::span<const double> b) {
  return sum_squared_diff(active_isa(), a, b);
}
inline double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  return sum_abs_diff(active_isa(), a, b);
}

namespace scalar {
template <class T>
void gemm_rows(bool trans_a, std::size_t row_begin, std::size_t row_end, std::size_t m,
               std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamCoeffs<T>& coeffs);
double sum_squared_diff(std::span<const double> a, std::span<const double> b);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

#if defined(NTLGEN_HAVE_AVX2)
namespace avx2 {
template <class T>
void gemm_rows(bool trans_a, std::size_t row_begin, std::size_t row_end, std::size_t m,
               std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate);
template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamCoeffs<T>& coeffs);
double sum_squared_diff(std::span<const double> a, std::span<const double> b);
double sum_abs_diff(std::span<const double> a, std::span<const double> b);
}  // namespace avx2
#endif

}  // namespace ntlgen::kernels
