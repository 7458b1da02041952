#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "jarcast/optim.hpp"
#include "optim_oracles.hpp"
#include "test_util.hpp"

using namespace jarcast;
using jarcast::testing::AdamOracle;
using jarcast::testing::MadgradOracle;

namespace {

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1>;

}  // namespace

TEST(Madgrad, SingleStepExample) {
  Vec x(1);
  x << 1.0;
  MadgradState<double> st;
  st.init(x);
  Vec g(1);
  g << 2.0;
  madgrad_step(x, g, st, MadgradOptions<double>{0.1, 0.0, 0.0, 1e-6});
  // 1 - 0.2 / (cbrt(0.4) + 1e-6)
  EXPECT_NEAR(x(0), 0.728558, 1e-6);
}

TEST(Madgrad, MatchesOracleOnQuadratic) {
  for (double momentum : {0.0, 0.9}) {
    Vec x(3);
    x << 1.0, -2.0, 0.5;
    std::vector<double> ox{1.0, -2.0, 0.5};
    MadgradState<double> st;
    st.init(x);
    const MadgradOptions<double> opts{1e-2, momentum, 1e-3, 1e-6};
    MadgradOracle oracle(ox, 1e-2, momentum, 1e-3, 1e-6);
    for (int k = 0; k < 100; ++k) {
      const Vec g = 2.0 * x;
      std::vector<double> og(3);
      for (int i = 0; i < 3; ++i) og[static_cast<std::size_t>(i)] = 2.0 * ox[static_cast<std::size_t>(i)];
      madgrad_step(x, g, st, opts);
      oracle.step(ox, og);
      for (int i = 0; i < 3; ++i) ASSERT_NEAR(x(i), ox[static_cast<std::size_t>(i)], 1e-6) << "step " << k;
    }
  }
}

TEST(Madgrad, FloatPathTracksDoubleOracle) {
  Rng rng(5);
  Matrix w = jarcast::testing::random_matrix(4, 3, rng);
  std::vector<double> ow(w.data(), w.data() + w.size());
  MadgradState<float> st;
  st.init(w);
  MadgradOracle oracle(ow, 1e-3, 0.9, 0.0, 1e-6);
  for (int k = 0; k < 100; ++k) {
    const Matrix g = 2.0f * w;
    std::vector<double> og(ow.size());
    for (std::size_t i = 0; i < og.size(); ++i) og[i] = 2.0 * ow[i];
    madgrad_step(w, g, st, MadgradOptions<float>{});
    oracle.step(ow, og);
  }
  for (Index i = 0; i < w.size(); ++i) EXPECT_NEAR(w.data()[i], ow[static_cast<std::size_t>(i)], 1e-5);
}

TEST(Madgrad, ZeroGradientLeavesParametersUnchanged) {
  Vec x(2);
  x << 0.3, -0.7;
  const Vec start = x;
  MadgradState<double> st;
  st.init(x);
  for (int k = 0; k < 10; ++k) madgrad_step(x, Vec::Zero(2), st, MadgradOptions<double>{});
  EXPECT_EQ(x, start);
}

TEST(Madgrad, MomentumZeroIsDualAveraging) {
  Vec x(1);
  x << 2.0;
  MadgradState<double> st;
  st.init(x);
  const MadgradOptions<double> opts{0.05, 0.0, 0.0, 1e-6};
  for (int k = 0; k < 5; ++k) {
    Vec g(1);
    g << std::sin(double(k)) + 0.5;
    madgrad_step(x, g, st, opts);
    const double z = st.x0(0) - st.grad_sum(0) / (std::cbrt(st.grad_sq_sum(0)) + opts.eps);
    EXPECT_DOUBLE_EQ(x(0), z);
  }
}

TEST(Madgrad, UninitializedStateThrows) {
  Vec x = Vec::Zero(2);
  MadgradState<double> st;
  EXPECT_THROW(madgrad_step(x, Vec::Zero(2), st, MadgradOptions<double>{}), std::logic_error);
  st.init(x);
  EXPECT_THROW(madgrad_step(x, Vec::Zero(3), st, MadgradOptions<double>{}), DimensionError);
}

TEST(Adam, MatchesOracle) {
  for (double b1 : {0.0, 0.9}) {
    Vec x(2);
    x << 1.0, -3.0;
    std::vector<double> ox{1.0, -3.0};
    AdamState<double> st;
    st.init(2);
    const AdamOptions<double> opts{1e-2, b1, 0.9, 1e-8};
    AdamOracle oracle(2, 1e-2, b1, 0.9, 1e-8);
    for (int k = 0; k < 100; ++k) {
      const Vec g = 2.0 * x;
      std::vector<double> og{2.0 * ox[0], 2.0 * ox[1]};
      adam_step(x, g, st, opts);
      oracle.step(ox, og);
      for (int i = 0; i < 2; ++i) ASSERT_NEAR(x(i), ox[static_cast<std::size_t>(i)], 1e-6);
    }
  }
}

TEST(Adam, Beta1ZeroKeepsOnlyCurrentGradient) {
  Vec x = Vec::Zero(2);
  AdamState<double> st;
  st.init(2);
  Vec g(2);
  g << 0.5, -4.0;
  adam_step(x, g, st, AdamOptions<double>{});
  g << 1.5, 2.0;
  adam_step(x, g, st, AdamOptions<double>{});
  EXPECT_TRUE((st.first == g.array()).all());
}

TEST(Adam, UninitializedStateThrows) {
  Vec x = Vec::Zero(2);
  AdamState<double> st;
  EXPECT_THROW(adam_step(x, Vec::Zero(2), st, AdamOptions<double>{}), std::logic_error);
}

TEST(OptimizerClasses, StepConsumesAndClearsGradients) {
  Parameter p("w", Matrix::Constant(2, 2, 1.0f));
  Madgrad opt({&p}, MadgradOptions<float>{});
  p.grad.setConstant(1.0f);
  opt.step();
  EXPECT_EQ(opt.steps(), 1);
  EXPECT_EQ(p.grad, Matrix::Zero(2, 2));
  EXPECT_LT(p.value(0, 0), 1.0f);

  p.grad(0, 0) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(opt.step(), NonFiniteError);
}
