#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "jarcast/grad_check.hpp"
#include "jarcast/ops.hpp"
#include "primitives.hpp"
#include "test_util.hpp"

using namespace jarcast;
using jarcast::testing::from_rows;
using jarcast::testing::random_matrix;

namespace {

constexpr int kTrials = 100;

using jarcast::testing::away_from_kink;
using jarcast::testing::kPrimitive;
using jarcast::testing::spread_rows;
using jarcast::testing::weighted;

using Unary = std::function<Tensor(const Tensor&)>;

void check_unary(const char* name, const Unary& op, const std::function<Matrix(Index, Index, Rng&)>& draw) {
  Rng rng(1234);
  double worst = 0.0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const Index r = 1 + static_cast<Index>(rng.below(4));
    const Index c = 1 + static_cast<Index>(rng.below(5));
    const Matrix x = draw(r, c, rng);
    Tape probe(Tape::Mode::kInference);
    const Tensor shape = op(probe.constant(x));
    const Matrix w = random_matrix(shape.rows(), shape.cols(), rng);
    const auto report = grad_check([&](Tape& t, const Tensor& in) { return weighted(t, op(in), w); }, x, kPrimitive);
    worst = std::max(worst, report.max_rel_error);
    ASSERT_TRUE(report.pass) << name << " trial " << trial << " rel " << report.max_rel_error << " analytic "
                             << report.analytic_at_worst << " numeric " << report.numeric_at_worst;
  }
  EXPECT_LE(worst, 1e-3) << name;
}

Matrix plain(Index r, Index c, Rng& rng) { return random_matrix(r, c, rng); }

}  // namespace

TEST(Matmul, IdentityLeavesOperand) {
  Tape tape;
  const Matrix m = from_rows({{1, 2}, {3, 4}});
  Tensor out = matmul(tape.constant(Matrix::Identity(2, 2)), tape.constant(m));
  EXPECT_EQ(out.value(), m);
}

TEST(Matmul, RowTimesColumn) {
  Tape tape;
  Tensor out = matmul(tape.constant(from_rows({{1, 0}})), tape.constant(from_rows({{0}, {5}})));
  EXPECT_EQ(out.value(), from_rows({{0}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape tape;
  try {
    matmul(tape.constant(Matrix::Zero(2, 3)), tape.constant(Matrix::Zero(2, 3)));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(Matmul, GradientMatchesFiniteDifferences3x4by4x2) {
  Rng rng(5);
  const Matrix a = random_matrix(3, 4, rng);
  const Matrix b = random_matrix(4, 2, rng);
  const Matrix w = random_matrix(3, 2, rng);
  auto wrt_a = grad_check([&](Tape& t, const Tensor& x) { return weighted(t, matmul(x, t.constant(b)), w); }, a, kPrimitive);
  auto wrt_b = grad_check([&](Tape& t, const Tensor& x) { return weighted(t, matmul(t.constant(a), x), w); }, b, kPrimitive);
  EXPECT_TRUE(wrt_a.pass) << wrt_a.max_rel_error;
  EXPECT_TRUE(wrt_b.pass) << wrt_b.max_rel_error;
}

TEST(LeakyRelu, Examples) {
  Tape tape;
  Tensor x = tape.variable(from_rows({{3.0f, -2.0f, 0.0f}}));
  Tensor y = leaky_relu(x, 0.2f);
  EXPECT_FLOAT_EQ(y.value()(0, 0), 3.0f);
  EXPECT_FLOAT_EQ(y.value()(0, 1), -0.4f);
  EXPECT_FLOAT_EQ(y.value()(0, 2), 0.0f);
  tape.backward(sum(y));
  EXPECT_FLOAT_EQ(tape.grad(x)(0, 0), 1.0f);
  EXPECT_FLOAT_EQ(tape.grad(x)(0, 1), 0.2f);
  EXPECT_FLOAT_EQ(tape.grad(x)(0, 2), 1.0f);  // subgradient at exactly 0
}

TEST(Subgradients, AtZero) {
  Tape tape;
  Tensor x = tape.variable(from_rows({{0.0f}}));
  Tensor loss = add(add(relu(x), abs(x)), sqrt(x));
  tape.backward(loss);
  EXPECT_FLOAT_EQ(tape.grad(x)(0, 0), 0.0f);
}

TEST(Softmax, Examples) {
  Tape tape;
  EXPECT_EQ(softmax(tape.constant(from_rows({{0, 0}}))).value(), from_rows({{0.5f, 0.5f}}));
  const Matrix third = softmax(tape.constant(from_rows({{1, 1, 1}}))).value();
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(third(0, j), 1.0f / 3.0f, 1e-7f);
  const Matrix big = softmax(tape.constant(from_rows({{1000, 0}}))).value();
  EXPECT_EQ(big(0, 0), 1.0f);
  EXPECT_EQ(big(0, 1), 0.0f);
}

TEST(Softmax, RowsAreDistributions) {
  Rng rng(77);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Matrix x = random_matrix(1 + static_cast<Index>(rng.below(6)), 1 + static_cast<Index>(rng.below(9)), rng,
                                   -30.0, 30.0);
    for (int axis : {0, 1}) {
      Tape tape(Tape::Mode::kInference);
      const Matrix y = softmax(tape.constant(x), axis).value();
      EXPECT_GE(y.minCoeff(), 0.0f);
      const Eigen::VectorXd sums = axis == 1 ? Eigen::VectorXd(y.cast<double>().rowwise().sum())
                                             : Eigen::VectorXd(y.cast<double>().colwise().sum().transpose());
      for (Index i = 0; i < sums.size(); ++i) EXPECT_NEAR(sums(i), 1.0, 1e-6);
    }
  }
}

TEST(LayerNorm, ConstantRowMapsToZero) {
  Tape tape;
  Tensor y = layer_norm(tape.constant(from_rows({{5, 5, 5}})), tape.constant(Matrix::Ones(1, 3)),
                        tape.constant(Matrix::Zero(1, 3)));
  EXPECT_EQ(y.value(), Matrix::Zero(1, 3));
}

TEST(LayerNorm, StandardizedRowIsFixed) {
  Tape tape;
  Tensor y = layer_norm(tape.constant(from_rows({{1, -1}})), tape.constant(Matrix::Ones(1, 2)),
                        tape.constant(Matrix::Zero(1, 2)), 0.0f);
  EXPECT_FLOAT_EQ(y.value()(0, 0), 1.0f);
  EXPECT_FLOAT_EQ(y.value()(0, 1), -1.0f);
}

TEST(LayerNorm, GradientsWrtAllInputs) {
  Rng rng(41);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Index r = 1 + static_cast<Index>(rng.below(3));
    const Index c = 2 + static_cast<Index>(rng.below(5));
    const Matrix x = spread_rows(r, c, rng);
    const Matrix g = random_matrix(1, c, rng);
    const Matrix b = random_matrix(1, c, rng);
    const Matrix w = random_matrix(r, c, rng);
    auto fx = grad_check(
        [&](Tape& t, const Tensor& in) { return weighted(t, layer_norm(in, t.constant(g), t.constant(b)), w); }, x, kPrimitive);
    auto fg = grad_check(
        [&](Tape& t, const Tensor& in) { return weighted(t, layer_norm(t.constant(x), in, t.constant(b)), w); }, g, kPrimitive);
    auto fb = grad_check(
        [&](Tape& t, const Tensor& in) { return weighted(t, layer_norm(t.constant(x), t.constant(g), in), w); }, b, kPrimitive);
    ASSERT_TRUE(fx.pass && fg.pass && fb.pass)
        << "trial " << trial << ": " << fx.max_rel_error << " " << fg.max_rel_error << " " << fb.max_rel_error;
  }
}

TEST(PrimitiveGradients, Elementwise) {
  check_unary("exp", [](const Tensor& x) { return exp(x); }, plain);
  check_unary("square", [](const Tensor& x) { return square(x); }, plain);
  check_unary("scale", [](const Tensor& x) { return scale(x, -1.7f); }, plain);
  check_unary("transpose", [](const Tensor& x) { return transpose(x); }, plain);
  check_unary("abs", [](const Tensor& x) { return abs(x); }, away_from_kink);
  check_unary("relu", [](const Tensor& x) { return relu(x); }, away_from_kink);
  check_unary("leaky_relu", [](const Tensor& x) { return leaky_relu(x, 0.2f); }, away_from_kink);
  // sqrt on [0.1, 1]: defined and smooth there.
  check_unary("sqrt", [](const Tensor& x) { return sqrt(x); },
              [](Index r, Index c, Rng& rng) { return random_matrix(r, c, rng, 0.1, 1.0); });
}

TEST(PrimitiveGradients, Reductions) {
  check_unary("sum", [](const Tensor& x) { return sum(x); }, plain);
  check_unary("mean", [](const Tensor& x) { return mean(x); }, plain);
  check_unary("sum0", [](const Tensor& x) { return sum(x, 0); }, plain);
  check_unary("sum1", [](const Tensor& x) { return sum(x, 1); }, plain);
  check_unary("mean0", [](const Tensor& x) { return mean(x, 0); }, plain);
  check_unary("mean1", [](const Tensor& x) { return mean(x, 1); }, plain);
  check_unary("softmax0", [](const Tensor& x) { return softmax(x, 0); }, plain);
  check_unary("softmax1", [](const Tensor& x) { return softmax(x, 1); }, plain);
}

TEST(PrimitiveGradients, StructuralOps) {
  check_unary("slice", [](const Tensor& x) { return slice(x, 0, x.rows(), 0, (x.cols() + 1) / 2); }, plain);
  check_unary("concat1", [](const Tensor& x) { return concat({x, scale(x, 2.0f), x}, 1); }, plain);
  check_unary("concat0", [](const Tensor& x) { return concat({x, exp(x)}, 0); }, plain);
}

TEST(PrimitiveGradients, Binary) {
  Rng rng(99);
  for (int trial = 0; trial < kTrials; ++trial) {
    const Index r = 1 + static_cast<Index>(rng.below(4));
    const Index k = 1 + static_cast<Index>(rng.below(4));
    const Index c = 1 + static_cast<Index>(rng.below(4));
    const Matrix a = random_matrix(r, c, rng);
    const Matrix b = random_matrix(r, c, rng);
    const Matrix m1 = random_matrix(r, k, rng);
    const Matrix m2 = random_matrix(k, c, rng);
    const Matrix bias = random_matrix(1, c, rng);
    const Matrix w = random_matrix(r, c, rng);

    using Binary = std::function<Tensor(const Tensor&, const Tensor&)>;
    const std::vector<std::pair<const char*, Binary>> same_shape = {
        {"add", [](const Tensor& x, const Tensor& y) { return add(x, y); }},
        {"sub", [](const Tensor& x, const Tensor& y) { return sub(x, y); }},
        {"mul", [](const Tensor& x, const Tensor& y) { return mul(x, y); }},
    };
    for (const auto& [name, op] : same_shape) {
      auto lhs = grad_check([&](Tape& t, const Tensor& x) { return weighted(t, op(x, t.constant(b)), w); }, a, kPrimitive);
      auto rhs = grad_check([&](Tape& t, const Tensor& y) { return weighted(t, op(t.constant(a), y), w); }, b, kPrimitive);
      ASSERT_TRUE(lhs.pass && rhs.pass) << name << " trial " << trial;
    }
    auto mm_l = grad_check([&](Tape& t, const Tensor& x) { return weighted(t, matmul(x, t.constant(m2)), w); }, m1, kPrimitive);
    auto mm_r = grad_check([&](Tape& t, const Tensor& y) { return weighted(t, matmul(t.constant(m1), y), w); }, m2, kPrimitive);
    ASSERT_TRUE(mm_l.pass && mm_r.pass) << "matmul trial " << trial;
    auto ab_x = grad_check([&](Tape& t, const Tensor& x) { return weighted(t, add_bias(x, t.constant(bias)), w); }, a, kPrimitive);
    auto ab_b = grad_check([&](Tape& t, const Tensor& y) { return weighted(t, add_bias(t.constant(a), y), w); }, bias, kPrimitive);
    ASSERT_TRUE(ab_x.pass && ab_b.pass) << "add_bias trial " << trial;
  }
}

TEST(GradCheck, SquareAtThree) {
  const auto report = grad_check([](Tape&, const Tensor& x) { return sum(square(x)); }, from_rows({{3.0f}}), kPrimitive);
  EXPECT_TRUE(report.pass);
  EXPECT_NEAR(report.numeric_at_worst, 6.0, 1e-2);
  EXPECT_NEAR(report.analytic_at_worst, 6.0, 1e-6);
}

TEST(GradCheck, DetectsAWrongGradient) {
  // relu with its mask flipped sign: a deliberately broken derivative.
  const Matrix x = from_rows({{0.5f, -0.5f, 0.25f}});
  const auto report = grad_check(
      [](Tape& t, const Tensor& in) {
        Matrix v = in.value().cwiseMax(0.0f);
        Tensor y = t.record(OpKind::kRelu, std::move(v), {in}, [in](Tape& tt, const Matrix& g) {
          tt.accumulate(in, -g);
        });
        return sum(y);
      },
      x, kPrimitive);
  EXPECT_FALSE(report.pass);
}

TEST(Ops, ShapeErrors) {
  Tape tape;
  Tensor a = tape.constant(Matrix::Zero(2, 3));
  Tensor b = tape.constant(Matrix::Zero(3, 2));
  EXPECT_THROW(add(a, b), DimensionError);
  EXPECT_THROW(add_bias(a, tape.constant(Matrix::Zero(1, 2))), DimensionError);
  EXPECT_THROW(slice(a, 1, 2, 0, 1), DimensionError);
  EXPECT_THROW(concat({a, b}, 1), DimensionError);
  EXPECT_THROW(softmax(a, 2), DimensionError);
  EXPECT_THROW(layer_norm(a, tape.constant(Matrix::Ones(1, 2)), tape.constant(Matrix::Zero(1, 3))),
               DimensionError);
}
