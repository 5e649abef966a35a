#include <cmath>

#include "ntlgen/kernels/kernels.hpp"

namespace ntlgen::kernels::scalar {

template <class T>
void gemm_rows(bool trans_a, std::size_t row_begin, std::size_t row_end, std::size_t m,
               std::size_t n, std::size_t k, const T* a, const T* b, T* c, bool accumulate) {
  for (std::size_t i = row_begin; i < row_end; ++i) {
    T* crow = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = T{0};
    }
    for (std::size_t p = 0; p < k; ++p) {
      const T av = trans_a ? a[p * m + i] : a[i * k + p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T>
void adam_update(std::span<T> param, std::span<const T> grad, std::span<T> m, std::span<T> v,
                 const AdamCoeffs<T>& cf) {
  const T one_m_b1 = T{1} - cf.beta1;
  const T one_m_b2 = T{1} - cf.beta2;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    m[i] = cf.beta1 * m[i] + one_m_b1 * g;
    v[i] = cf.beta2 * v[i] + one_m_b2 * (g * g);
    const T m_hat = m[i] / cf.bias_correction1;
    const T v_hat = v[i] / cf.bias_correction2;
    param[i] -= cf.lr * m_hat / (std::sqrt(v_hat) + cf.eps);
  }
}

double sum_squared_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
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

}  // namespace ntlgen::kernels::scalar
