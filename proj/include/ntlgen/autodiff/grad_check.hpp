#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ntlgen/autodiff/tape.hpp"

namespace ntlgen::ad {

template <std::floating_point T>
using DiffOp = std::function<Var<T>(Tape<T>&, const std::vector<Var<T>>&)>;

// Reports whether coordinate `index` of input `input` (current value
// `value`) lies within `step` of a point where the op is not differentiable.
using KinkPredicate =
    std::function<bool(std::size_t input, std::size_t index, double value, double step)>;

// Kink at zero for every coordinate, e.g. for relu/leaky_relu/abs.
KinkPredicate kink_at_zero();

struct GradCheckReport {
  // max |analytic - numeric| / max(max |analytic|, max |numeric|)
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::size_t kink_excluded = 0;
  bool pass = false;
};

// Compares reverse-mode gradients of a random projection sum(w * op(x))
// against central finite differences with step cbrt(eps) * max(1, |x|).
// Coordinates flagged by `kink` are skipped and counted, not failed.
template <std::floating_point T>
GradCheckReport grad_check(const DiffOp<T>& op, const std::vector<Tensor<T>>& point,
                           double tolerance, const KinkPredicate& kink = {},
                           std::uint64_t projection_seed = 0x5eed);

}  // namespace ntlgen::ad
