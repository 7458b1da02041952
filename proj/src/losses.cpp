#include "jarcast/losses.hpp"

#include "jarcast/ops.hpp"

namespace jarcast {

Matrix interpolate(const Matrix& real, const Matrix& fake, const Eigen::VectorXf& eps) {
  if (real.rows() != fake.rows() || real.cols() != fake.cols()) {
    throw DimensionError("interpolate: real " + shape_string(real.rows(), real.cols()) + " vs fake " +
                         shape_string(fake.rows(), fake.cols()));
  }
  if (eps.size() != real.rows()) throw DimensionError("interpolate: need one eps per row");
  Matrix out(real.rows(), real.cols());
  for (Index r = 0; r < real.rows(); ++r) {
    const float e = eps(r);
    if (!(e >= 0.0f && e <= 1.0f)) throw DimensionError("interpolate: eps outside [0,1]");
    out.row(r) = e * real.row(r) + (1.0f - e) * fake.row(r);
  }
  return out;
}

Matrix join_sequence(const Matrix& cond, const Matrix& prediction) {
  if (cond.rows() != prediction.rows()) throw DimensionError("join_sequence: batch sizes differ");
  Matrix out(cond.rows(), cond.cols() + prediction.cols());
  out << cond, prediction;
  return out;
}

Tensor generator_loss(Tape& tape, const Matrix& cond, const Matrix& target, Generator& gen,
                      const Critic& critic, Rng* dropout_rng) {
  if (cond.rows() < 1) throw DimensionError("generator_loss: empty batch");
  if (target.rows() != cond.rows()) throw DimensionError("generator_loss: cond/target batch sizes differ");
  if (cond.cols() + target.cols() != critic.config().seq_len) {
    throw DimensionError("generator_loss: critic expects width " + std::to_string(critic.config().seq_len) +
                         ", got " + std::to_string(cond.cols() + target.cols()));
  }
  Tensor pred = gen.forward(tape, cond, true, dropout_rng);
  if (pred.cols() != target.cols()) throw DimensionError("generator_loss: prediction/target widths differ");

  Tensor l1 = mean(sum(abs(sub(pred, tape.constant(target))), 1));
  Tensor fake = concat({tape.constant(cond), pred}, 1);
  Tensor adversarial = mean(critic.forward(Binder(tape, false), fake));
  return sub(l1, adversarial);
}

CriticLossTerms critic_loss(Tape& tape, const Matrix& real, const Matrix& fake, Critic& critic, double lambda,
                            const Eigen::VectorXf& eps) {
  if (lambda < 0.0) throw DimensionError("critic_loss: lambda must be >= 0");
  if (real.cols() != critic.config().seq_len || fake.cols() != critic.config().seq_len) {
    throw DimensionError("critic_loss: critic expects width " + std::to_string(critic.config().seq_len));
  }
  Binder bind(tape, true);
  Tensor fake_score = mean(critic.forward(bind, tape.constant(fake)));
  Tensor real_score = mean(critic.forward(bind, tape.constant(real)));

  Tensor xbar = tape.constant(interpolate(real, fake, eps));
  Tensor grad = critic.input_gradient(bind, xbar);
  Tensor norms = sqrt(sum(square(grad), 1));
  Tensor ones = tape.constant(Matrix::Ones(norms.rows(), 1));
  Tensor penalty = mean(square(sub(norms, ones)));

  CriticLossTerms terms;
  terms.loss = add(sub(fake_score, real_score), scale(penalty, static_cast<float>(lambda)));
  terms.fake_score = fake_score.item();
  terms.real_score = real_score.item();
  terms.penalty = penalty.item();
  double total = 0.0;
  for (Index r = 0; r < norms.rows(); ++r) total += norms.value()(r, 0);
  terms.grad_norm = total / static_cast<double>(norms.rows());
  return terms;
}

CriticLossTerms critic_loss(Tape& tape, const Matrix& real, const Generator& gen, Critic& critic, double lambda,
                            Rng& rng) {
  const Index tau = gen.config().tau;
  const Index t0 = real.cols() - tau;
  if (t0 < 1) throw DimensionError("critic_loss: window too short for the generator");
  const Matrix cond = real.leftCols(t0);
  const Matrix fake = join_sequence(cond, gen.predict(cond));
  Eigen::VectorXf eps(real.rows());
  for (Index r = 0; r < eps.size(); ++r) eps(r) = static_cast<float>(rng.uniform());
  return critic_loss(tape, real, fake, critic, lambda, eps);
}

double mean_gradient_norm(const Critic& critic, const Matrix& x) {
  Tape tape(Tape::Mode::kInference);
  Tensor g = critic.input_gradient(Binder(tape, false), tape.constant_ref(x));
  double total = 0.0;
  for (Index r = 0; r < g.rows(); ++r) total += std::sqrt(static_cast<double>(g.value().row(r).squaredNorm()));
  return total / static_cast<double>(g.rows());
}

}  // namespace jarcast
