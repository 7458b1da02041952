#include "jarcast/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "jarcast/ops.hpp"

namespace jarcast {
namespace {

class Tracker {
 public:
  explicit Tracker(const GradCheckOptions& opts) : opts_(opts) {}

  void observe(double analytic, double numeric) {
    const double abs_err = std::abs(analytic - numeric);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opts_.floor});
    const double rel = abs_err / denom;
    report_.max_abs_error = std::max(report_.max_abs_error, abs_err);
    if (rel > report_.max_rel_error || report_.worst_index < 0) {
      report_.max_rel_error = rel;
      report_.worst_index = report_.coordinates;
      report_.analytic_at_worst = analytic;
      report_.numeric_at_worst = numeric;
    }
    ++report_.coordinates;
  }

  GradCheckReport finish() {
    report_.pass = report_.max_rel_error <= opts_.tol;
    return report_;
  }

 private:
  GradCheckOptions opts_;
  GradCheckReport report_;
};

double sum_in_double(const Tensor& y) {
  double total = 0.0;
  const Matrix& v = y.value();
  for (Index i = 0; i < v.size(); ++i) total += v.data()[i];
  return total;
}

Tensor as_scalar(const Tensor& y) { return y.rows() == 1 && y.cols() == 1 ? y : sum(y); }

// Perturbs *slot by +-step and returns the central difference of eval().
template <typename Eval>
double central_difference(float* slot, float step, Eval&& eval) {
  const float saved = *slot;
  const float plus = saved + step;
  const float minus = saved - step;
  *slot = plus;
  const double f_plus = eval();
  *slot = minus;
  const double f_minus = eval();
  *slot = saved;
  // Divide by the representable spacing, not the nominal 2*step.
  return (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
}

}  // namespace

GradCheckReport grad_check(const InputLossFn& f, const Matrix& x, const GradCheckOptions& opts) {
  Matrix analytic;
  {
    Tape tape;
    Tensor in = tape.variable(x);
    tape.backward(as_scalar(f(tape, in)));
    analytic = tape.grad(in);
  }

  Matrix probe = x;
  auto eval = [&]() {
    Tape tape(Tape::Mode::kInference);
    Tensor in = tape.constant_ref(probe);
    return sum_in_double(f(tape, in));
  };

  Tracker tracker(opts);
  for (Index i = 0; i < probe.size(); ++i) {
    const double numeric = central_difference(probe.data() + i, opts.step, eval);
    tracker.observe(analytic.data()[i], numeric);
  }
  return tracker.finish();
}

GradCheckReport grad_check(const ParamLossFn& f, std::span<Parameter* const> params,
                           const GradCheckOptions& opts) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(as_scalar(f(tape)));
  }

  auto eval = [&]() {
    Tape tape(Tape::Mode::kInference);
    return sum_in_double(f(tape));
  };

  Tracker tracker(opts);
  for (Parameter* p : params) {
    const Matrix analytic = p->grad;
    for (Index i = 0; i < p->value.size(); ++i) {
      const double numeric = central_difference(p->value.data() + i, opts.step, eval);
      tracker.observe(analytic.data()[i], numeric);
    }
  }
  for (Parameter* p : params) p->zero_grad();
  return tracker.finish();
}

}  // namespace jarcast
