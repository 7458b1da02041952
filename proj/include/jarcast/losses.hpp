#pragma once

#include "jarcast/model.hpp"

namespace jarcast {

// Row-wise convex combination eps_i * real_i + (1 - eps_i) * fake_i, one eps
// per batch row.
Matrix interpolate(const Matrix& real, const Matrix& fake, const Eigen::VectorXf& eps);

// [cond | prediction] for every row.
Matrix join_sequence(const Matrix& cond, const Matrix& prediction);

// L_G = mean_i ||G(cond_i) - target_i||_1 - mean_i D([cond_i | G(cond_i)]).
// Gradients reach generator parameters only.
Tensor generator_loss(Tape& tape, const Matrix& cond, const Matrix& target, Generator& gen,
                      const Critic& critic, Rng* dropout_rng = nullptr);

struct CriticLossTerms {
  Tensor loss;
  double fake_score = 0.0;      // mean D(fake)
  double real_score = 0.0;      // mean D(real)
  double penalty = 0.0;         // mean (||grad D(xbar)|| - 1)^2
  double grad_norm = 0.0;       // mean ||grad D(xbar)||
};

// L_C = mean D(fake) - mean D(real) + lambda * mean (||grad_xbar D(xbar)||_2 - 1)^2
// with fake = [cond | G(cond)] computed from the frozen generator and
// xbar = interpolate(real, fake, eps). `real` holds full windows (batch x S)
// whose first S - tau columns are the conditioning range. Gradients reach
// critic parameters only.
CriticLossTerms critic_loss(Tape& tape, const Matrix& real, const Matrix& fake, Critic& critic, double lambda,
                            const Eigen::VectorXf& eps);
CriticLossTerms critic_loss(Tape& tape, const Matrix& real, const Generator& gen, Critic& critic, double lambda,
                            Rng& rng);

// Mean ||grad_x D(x)||_2 over the rows of x.
double mean_gradient_norm(const Critic& critic, const Matrix& x);

}  // namespace jarcast
