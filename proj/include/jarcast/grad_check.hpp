#pragma once

#include <functional>
#include <span>

#include "jarcast/autodiff.hpp"

namespace jarcast {

struct GradCheckReport {
  // max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, floor)
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  Index worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  Index coordinates = 0;
  bool pass = true;
};

struct GradCheckOptions {
  float step = 1e-3f;
  double tol = 1e-3;
  // Denominator floor, so coordinates with near-zero gradients are judged
  // on absolute error instead of amplifying float32 rounding noise.
  double floor = 1e-1;
};

// The checked function is the sum of the entries of the tensor f returns.
// The finite-difference side adds those entries in double, so a caller that
// returns an unreduced tensor keeps float32 summation rounding out of the
// difference quotient.
// f builds a tensor on the tape from the input tensor.
using InputLossFn = std::function<Tensor(Tape&, const Tensor&)>;
// f builds a tensor on the tape, binding whatever parameters it needs.
using ParamLossFn = std::function<Tensor(Tape&)>;

// Central differences per coordinate of x versus one backward pass.
GradCheckReport grad_check(const InputLossFn& f, const Matrix& x, const GradCheckOptions& opts = {});

// Same, over every entry of every listed parameter. Parameter grads are reset.
GradCheckReport grad_check(const ParamLossFn& f, std::span<Parameter* const> params,
                           const GradCheckOptions& opts = {});

}  // namespace jarcast
