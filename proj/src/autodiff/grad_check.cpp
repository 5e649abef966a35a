#include "ntlgen/autodiff/grad_check.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "ntlgen/autodiff/ops.hpp"

namespace ntlgen::ad {

KinkPredicate kink_at_zero() {
  return [](std::size_t, std::size_t, double value, double step) {
    return std::abs(value) <= step;
  };
}

namespace {

template <class T>
Tensor<T> projection(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Tensor<T> w(shape);
  for (auto& v : w.data()) v = static_cast<T>(dist(rng));
  return w;
}

template <class T>
double projected_value(const DiffOp<T>& op, const std::vector<Tensor<T>>& point,
                       std::uint64_t seed) {
  Tape<T> tape;
  std::vector<Var<T>> inputs;
  for (const auto& t : point) inputs.push_back(tape.constant(t));
  const Var<T> out = op(tape, inputs);
  const Tensor<T> w = projection<T>(out.shape(), seed);
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    s += static_cast<double>(w[i]) * static_cast<double>(out.value()[i]);
  }
  return s;
}

}  // namespace

template <std::floating_point T>
GradCheckReport grad_check(const DiffOp<T>& op, const std::vector<Tensor<T>>& point,
                           double tolerance, const KinkPredicate& kink,
                           std::uint64_t projection_seed) {
  Tape<T> tape;
  std::vector<Var<T>> inputs;
  for (const auto& t : point) inputs.push_back(tape.variable(t));
  const Var<T> out = op(tape, inputs);
  const Var<T> w = tape.constant(projection<T>(out.shape(), projection_seed));
  tape.backward(sum(mul(out, w)));

  const double base_step = std::cbrt(static_cast<double>(std::numeric_limits<T>::epsilon()));
  GradCheckReport report;
  double max_analytic = 0.0, max_numeric = 0.0;
  std::vector<Tensor<T>> probe = point;
  for (std::size_t j = 0; j < point.size(); ++j) {
    const Tensor<T>& g = inputs[j].grad();
    for (std::size_t i = 0; i < point[j].size(); ++i) {
      const double x = point[j][i];
      const double h = base_step * std::max(1.0, std::abs(x));
      if (kink && kink(j, i, x, h)) {
        ++report.kink_excluded;
        continue;
      }
      // Use the representable displacement so the quotient is exact in h.
      const T xp = static_cast<T>(x + h);
      const T xm = static_cast<T>(x - h);
      probe[j][i] = xp;
      const double fp = projected_value(op, probe, projection_seed);
      probe[j][i] = xm;
      const double fm = projected_value(op, probe, projection_seed);
      probe[j][i] = point[j][i];
      const double numeric = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
      const double analytic = g.empty() ? 0.0 : static_cast<double>(g[i]);
      report.max_abs_error = std::max(report.max_abs_error, std::abs(analytic - numeric));
      max_analytic = std::max(max_analytic, std::abs(analytic));
      max_numeric = std::max(max_numeric, std::abs(numeric));
      ++report.checked;
    }
  }
  const double denom = std::max({max_analytic, max_numeric, std::numeric_limits<double>::min()});
  report.max_rel_error = report.max_abs_error == 0.0 ? 0.0 : report.max_abs_error / denom;
  report.pass = report.max_rel_error < tolerance;
  return report;
}

template GradCheckReport grad_check<float>(const DiffOp<float>&, const std::vector<Tensor<float>>&,
                                           double, const KinkPredicate&, std::uint64_t);
template GradCheckReport grad_check<double>(const DiffOp<double>&,
                                            const std::vector<Tensor<double>>&, double,
                                            const KinkPredicate&, std::uint64_t);

}  // namespace ntlgen::ad
