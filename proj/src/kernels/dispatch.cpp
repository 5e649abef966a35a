#include <algorithm>
#include <cstdlib>
#include <string>

#include "ntlgen/kernels/kernels.hpp"
#include "ntlgen/parallel.hpp"

namespace ntlgen::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

Isa detected_isa() {
#if defined(NTLGEN_HAVE_AVX2)
  static const bool has_avx2 = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  if (has_avx2) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

Isa active_isa() {
  static const Isa isa = [] {
    if (const char* env = std::getenv("NTLGEN_ISA"); env && std::string(env) == "scalar") {
      return Isa::kScalar;
    }
    return detected_isa();
  }();
  return isa;
}

namespace {

// Rows per worker chunk; small products stay on one thread.
std::size_t min_rows_per_chunk(std::size_t n, std::size_t k) {
  const std::size_t work_per_row = std::max<std::size_t>(1, n * k);
  return std::max<std::size_t>(4, (std::size_t{1} << 18) / work_per_row);
}

}  // namespace

template <class T>
void gemm(Isa isa, bool trans_a, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (isa == Isa::kAvx2 && detected_isa() != Isa::kAvx2) isa = Isa::kScalar;
  parallel_for(0, m, min_rows_per_chunk(n, k), [&](std::size_t lo, std::size_t hi) {
#if defined(NTLGEN_HAVE_AVX2)
    if (isa == Isa::kAvx2) {
      avx2::gemm_rows<T>(trans_a, lo, hi, m, n, k, a, b, c, accumulate);
      return;
    }
#endif
    scalar::gemm_rows<T>(trans_a, lo, hi, m, n, k, a, b, c, accumulate);
  });
}

template <class T>
void adam_update(Isa isa, std::span<T> param, std::span<const T> grad, std::span<T> m,
                 std::span<T> v, const AdamCoeffs<T>& coeffs) {
#if defined(NTLGEN_HAVE_AVX2)
  if (isa == Isa::kAvx2 && detected_isa() == Isa::kAvx2) {
    avx2::adam_update<T>(param, grad, m, v, coeffs);
    return;
  }
#endif
  (void)isa;
  scalar::adam_update<T>(param, grad, m, v, coeffs);
}

double sum_squared_diff(Isa isa, std::span<const double> a, std::span<const double> b) {
#if defined(NTLGEN_HAVE_AVX2)
  if (isa == Isa::kAvx2 && detected_isa() == Isa::kAvx2) return avx2::sum_squared_diff(a, b);
#endif
  (void)isa;
  return scalar::sum_squared_diff(a, b);
}

double sum_abs_diff(Isa isa, std::span<const double> a, std::span<const double> b) {
#if defined(NTLGEN_HAVE_AVX2)
  if (isa == Isa::kAvx2 && detected_isa() == Isa::kAvx2) return avx2::sum_abs_diff(a, b);
#endif
  (void)isa;
  return scalar::sum_abs_diff(a, b);
}

template void gemm<float>(Isa, bool, std::size_t, std::size_t, std::size_t, const float*,
                          const float*, float*, bool);
template void gemm<double>(Isa, bool, std::size_t, std::size_t, std::size_t, const double*,
                           const double*, double*, bool);
template void adam_update<float>(Isa, std::span<float>, std::span<const float>, std::span<float>,
                                 std::span<float>, const AdamCoeffs<float>&);
template void adam_update<double>(Isa, std::span<double>, std::span<const double>,
                                  std::span<double>, std::span<double>,
                                  const AdamCoeffs<double>&);

}  // namespace ntlgen::kernels
