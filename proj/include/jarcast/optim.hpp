#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "jarcast/autodiff.hpp"
#include "jarcast/types.hpp"

namespace jarcast {

template <typename Scalar>
struct MadgradOptions {
  Scalar lr = Scalar(1e-3);
  Scalar momentum = Scalar(0.9);
  Scalar weight_decay = Scalar(0);
  Scalar eps = Scalar(1e-6);
};

// Per-array MADGRAD buffers: the initial point x0, the lr-weighted gradient
// sum s, the lr-weighted squared-gradient sum nu, and the step counter k.
template <typename Scalar>
struct MadgradState {
  ArrayX<Scalar> x0;
  ArrayX<Scalar> grad_sum;
  ArrayX<Scalar> grad_sq_sum;
  std::int64_t step = 0;
  bool initialized = false;

  template <typename Derived>
  void init(const Eigen::DenseBase<Derived>& params) {
    x0 = params.derived().reshaped().array().template cast<Scalar>();
    grad_sum = ArrayX<Scalar>::Zero(x0.size());
    grad_sq_sum = ArrayX<Scalar>::Zero(x0.size());
    step = 0;
    initialized = true;
  }
};

// One MADGRAD update in place:
//   g     += weight_decay * x
//   lambda = lr * sqrt(k + 1)
//   s     += lambda * g
//   nu    += lambda * g^2
//   z      = x0 - s / (cbrt(nu) + eps)
//   x     += (1 - momentum) * (z - x)
// With momentum 0 this is pure dual averaging, x = z.
template <typename Scalar, typename ParamDerived, typename GradDerived>
void madgrad_step(Eigen::DenseBase<ParamDerived>& params, const Eigen::DenseBase<GradDerived>& grads,
                  MadgradState<Scalar>& state, const MadgradOptions<Scalar>& opts) {
  if (!state.initialized) throw std::logic_error("madgrad_step: state not initialized");
  auto x = params.derived().reshaped().array();
  auto g_in = grads.derived().reshaped().array();
  if (x.size() != state.x0.size() || g_in.size() != state.x0.size()) {
    throw DimensionError("madgrad_step: parameter, gradient and state sizes differ");
  }
  ArrayX<Scalar> g = g_in.template cast<Scalar>();
  if (opts.weight_decay != Scalar(0)) g += opts.weight_decay * x.template cast<Scalar>();

  const Scalar lambda = opts.lr * std::sqrt(static_cast<Scalar>(state.step + 1));
  state.grad_sum += lambda * g;
  state.grad_sq_sum += lambda * g * g;
  const ArrayX<Scalar> z = state.x0 - state.grad_sum / (state.grad_sq_sum.unaryExpr([](Scalar v) {
                                                         return std::cbrt(v);
                                                       }) + opts.eps);
  const Scalar c = Scalar(1) - opts.momentum;
  if (c == Scalar(1)) {
    x = z.template cast<typename ParamDerived::Scalar>();
  } else {
    ArrayX<Scalar> xs = x.template cast<Scalar>();
    xs += c * (z - xs);
    x = xs.template cast<typename ParamDerived::Scalar>();
  }
  ++state.step;
}

template <typename Scalar>
struct AdamOptions {
  Scalar lr = Scalar(1e-4);
  Scalar beta1 = Scalar(0);
  Scalar beta2 = Scalar(0.9);
  Scalar eps = Scalar(1e-8);
};

template <typename Scalar>
struct AdamState {
  ArrayX<Scalar> first;
  ArrayX<Scalar> second;
  std::int64_t step = 0;
  bool initialized = false;

  void init(Index size) {
    first = ArrayX<Scalar>::Zero(size);
    second = ArrayX<Scalar>::Zero(size);
    step = 0;
    initialized = true;
  }
};

// Bias-corrected Adam.
template <typename Scalar, typename ParamDerived, typename GradDerived>
void adam_step(Eigen::DenseBase<ParamDerived>& params, const Eigen::DenseBase<GradDerived>& grads,
               AdamState<Scalar>& state, const AdamOptions<Scalar>& opts) {
  if (!state.initialized) throw std::logic_error("adam_step: state not initialized");
  auto x = params.derived().reshaped().array();
  const ArrayX<Scalar> g = grads.derived().reshaped().array().template cast<Scalar>();
  if (x.size() != state.first.size() || g.size() != state.first.size()) {
    throw DimensionError("adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  state.first = opts.beta1 * state.first + (Scalar(1) - opts.beta1) * g;
  state.second = opts.beta2 * state.second + (Scalar(1) - opts.beta2) * g * g;
  const Scalar t = static_cast<Scalar>(state.step);
  const Scalar bc1 = Scalar(1) - std::pow(opts.beta1, t);
  const Scalar bc2 = Scalar(1) - std::pow(opts.beta2, t);
  const ArrayX<Scalar> update = opts.lr * (state.first / bc1) / ((state.second / bc2).sqrt() + opts.eps);
  ArrayX<Scalar> xs = x.template cast<Scalar>();
  xs -= update;
  x = xs.template cast<typename ParamDerived::Scalar>();
}

// Applies an update rule across a parameter list, reading each Parameter's
// accumulated grad. Gradients are cleared after the step.
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step() = 0;
  virtual std::int64_t steps() const = 0;

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

 protected:
  explicit Optimizer(std::vector<Parameter*> params) : params_(std::move(params)) {}
  std::vector<Parameter*> params_;
};

class Madgrad final : public Optimizer {
 public:
  Madgrad(std::vector<Parameter*> params, MadgradOptions<float> opts)
      : Optimizer(std::move(params)), opts_(opts), states_(params_.size()) {
    for (std::size_t i = 0; i < params_.size(); ++i) states_[i].init(params_[i]->value);
  }

  void step() override {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i]->grad.allFinite()) {
        throw NonFiniteError("madgrad: non-finite gradient for " + params_[i]->name);
      }
      madgrad_step(params_[i]->value, params_[i]->grad, states_[i], opts_);
    }
    zero_grad();
    ++steps_;
  }

  std::int64_t steps() const override { return steps_; }

 private:
  MadgradOptions<float> opts_;
  std::vector<MadgradState<float>> states_;
  std::int64_t steps_ = 0;
};

class Adam final : public Optimizer {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions<float> opts)
      : Optimizer(std::move(params)), opts_(opts), states_(params_.size()) {
    for (std::size_t i = 0; i < params_.size(); ++i) states_[i].init(params_[i]->value.size());
  }

  void step() override {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i]->grad.allFinite()) {
        throw NonFiniteError("adam: non-finite gradient for " + params_[i]->name);
      }
      adam_step(params_[i]->value, params_[i]->grad, states_[i], opts_);
    }
    zero_grad();
    ++steps_;
  }

  std::int64_t steps() const override { return steps_; }

 private:
  AdamOptions<float> opts_;
  std::vector<AdamState<float>> states_;
  std::int64_t steps_ = 0;
};

}  // namespace jarcast
