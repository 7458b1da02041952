#include "jarcast/ops.hpp"

#include <cmath>
#include <string>

namespace jarcast {
namespace {

std::string shape_of(const Tensor& t) { return shape_string(t.rows(), t.cols()); }

Tape& same_tape(const Tensor& a, const Tensor& b) {
  if (&a.tape() != &b.tape()) throw GraphError("operands recorded on different tapes");
  return a.tape();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
}

void require_axis(const char* op, int axis) {
  if (axis != 0 && axis != 1) throw DimensionError(std::string(op) + ": axis must be 0 or 1");
}

// In place, row by row: y = exp(x - max) / sum, the sum taken in double.
void softmax_rows(Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r).array();
    row = (row - row.maxCoeff()).exp();
    const double z = row.template cast<double>().sum();
    row *= static_cast<float>(1.0 / z);
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_of(a) + " * " + shape_of(b));
  }
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  return tape.record(OpKind::kMatmul, std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
    if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("add", a, b);
  return tape.record(OpKind::kAdd, a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("sub", a, b);
  return tape.record(OpKind::kSub, a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape("mul", a, b);
  Matrix out = a.value().cwiseProduct(b.value());
  return tape.record(OpKind::kMul, std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
    if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Tensor scale(const Tensor& x, float factor) {
  return x.tape().record(OpKind::kScale, x.value() * factor, {x},
                         [x, factor](Tape& t, const Matrix& g) { t.accumulate(x, g * factor); });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  Tape& tape = same_tape(x, bias);
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw DimensionError("add_bias: bias " + shape_of(bias) + " does not match " + shape_of(x));
  }
  Matrix out = x.value().rowwise() + bias.value().row(0);
  return tape.record(OpKind::kAddBias, std::move(out), {x, bias}, [x, bias](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    if (bias.requires_grad()) {
      Matrix gb = Matrix::Zero(1, g.cols());
      for (Index c = 0; c < g.cols(); ++c) {
        double acc = 0.0;
        for (Index r = 0; r < g.rows(); ++r) acc += g(r, c);
        gb(0, c) = static_cast<float>(acc);
      }
      t.accumulate(bias, gb);
    }
  });
}

namespace {

double total(const Matrix& m) {
  double acc = 0.0;
  const float* p = m.data();
  for (Index i = 0; i < m.size(); ++i) acc += p[i];
  return acc;
}

Matrix reduce(const Matrix& m, int axis, double factor) {
  if (axis == 0) {
    Matrix out(1, m.cols());
    for (Index c = 0; c < m.cols(); ++c) {
      double acc = 0.0;
      for (Index r = 0; r < m.rows(); ++r) acc += m(r, c);
      out(0, c) = static_cast<float>(acc * factor);
    }
    return out;
  }
  Matrix out(m.rows(), 1);
  for (Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Index c = 0; c < m.cols(); ++c) acc += m(r, c);
    out(r, 0) = static_cast<float>(acc * factor);
  }
  return out;
}

Tensor reduce_all(const Tensor& x, OpKind kind, double factor) {
  Matrix out(1, 1);
  out(0, 0) = static_cast<float>(total(x.value()) * factor);
  return x.tape().record(kind, std::move(out), {x}, [x, factor](Tape& t, const Matrix& g) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), static_cast<float>(g(0, 0) * factor)));
  });
}

Tensor reduce_axis(const Tensor& x, OpKind kind, int axis, double factor) {
  return x.tape().record(kind, reduce(x.value(), axis, factor), {x},
                         [x, axis, factor](Tape& t, const Matrix& g) {
                           const float f = static_cast<float>(factor);
                           if (axis == 0) {
                             Matrix gx = (g * f).replicate(x.rows(), 1);
                             t.accumulate(x, gx);
                           } else {
                             Matrix gx = (g * f).replicate(1, x.cols());
                             t.accumulate(x, gx);
                           }
                         });
}

}  // namespace

Tensor sum(const Tensor& x) { return reduce_all(x, OpKind::kSum, 1.0); }

Tensor mean(const Tensor& x) {
  return reduce_all(x, OpKind::kMean, 1.0 / static_cast<double>(x.value().size()));
}

Tensor sum(const Tensor& x, int axis) {
  require_axis("sum", axis);
  return reduce_axis(x, OpKind::kSum, axis, 1.0);
}

Tensor mean(const Tensor& x, int axis) {
  require_axis("mean", axis);
  const double n = static_cast<double>(axis == 0 ? x.rows() : x.cols());
  return reduce_axis(x, OpKind::kMean, axis, 1.0 / n);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require_axis("concat", axis);
  if (parts.empty()) throw DimensionError("concat: no operands");
  Tape& tape = parts.front().tape();
  Index rows = 0;
  Index cols = 0;
  for (const Tensor& p : parts) {
    same_tape(parts.front(), p);
    if (axis == 1) {
      if (p.rows() != parts.front().rows()) {
        throw DimensionError("concat: row counts differ, " + shape_of(parts.front()) + " vs " + shape_of(p));
      }
      cols += p.cols();
    } else {
      if (p.cols() != parts.front().cols()) {
        throw DimensionError("concat: column counts differ, " + shape_of(parts.front()) + " vs " + shape_of(p));
      }
      rows += p.rows();
    }
  }
  if (axis == 1) rows = parts.front().rows();
  else cols = parts.front().cols();

  Matrix out(rows, cols);
  Index offset = 0;
  for (const Tensor& p : parts) {
    if (axis == 1) {
      out.middleCols(offset, p.cols()) = p.value();
      offset += p.cols();
    } else {
      out.middleRows(offset, p.rows()) = p.value();
      offset += p.rows();
    }
  }
  return tape.record(OpKind::kConcat, std::move(out), parts, [parts, axis](Tape& t, const Matrix& g) {
    Index off = 0;
    for (const Tensor& p : parts) {
      if (axis == 1) {
        if (p.requires_grad()) t.accumulate(p, g.middleCols(off, p.cols()));
        off += p.cols();
      } else {
        if (p.requires_grad()) t.accumulate(p, g.middleRows(off, p.rows()));
        off += p.rows();
      }
    }
  });
}

Tensor slice(const Tensor& x, Index row, Index rows, Index col, Index cols) {
  if (row < 0 || col < 0 || rows < 1 || cols < 1 || row + rows > x.rows() || col + cols > x.cols()) {
    throw DimensionError("slice: block " + std::to_string(row) + "+" + std::to_string(rows) + ", " +
                         std::to_string(col) + "+" + std::to_string(cols) + " outside " + shape_of(x));
  }
  Matrix out = x.value().block(row, col, rows, cols);
  return x.tape().record(OpKind::kSlice, std::move(out), {x}, [=](Tape& t, const Matrix& g) {
    Matrix gx = Matrix::Zero(x.rows(), x.cols());
    gx.block(row, col, rows, cols) = g;
    t.accumulate(x, gx);
  });
}

Tensor transpose(const Tensor& x) {
  return x.tape().record(OpKind::kTranspose, x.value().transpose(), {x},
                         [x](Tape& t, const Matrix& g) { t.accumulate(x, g.transpose()); });
}

Tensor exp(const Tensor& x) {
  Matrix out = x.value().array().exp().matrix();
  return x.tape().record(OpKind::kExp, std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, g.cwiseProduct(x.value().array().exp().matrix()));
  });
}

Tensor sqrt(const Tensor& x) {
  if ((x.value().array() < 0.0f).any()) throw DimensionError("sqrt: negative input");
  Matrix out = x.value().array().sqrt().matrix();
  return x.tape().record(OpKind::kSqrt, std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    Matrix gx = x.value().unaryExpr([](float v) { return v > 0.0f ? 0.5f / std::sqrt(v) : 0.0f; });
    t.accumulate(x, g.cwiseProduct(gx));
  });
}

Tensor square(const Tensor& x) {
  return x.tape().record(OpKind::kSquare, x.value().cwiseAbs2(), {x}, [x](Tape& t, const Matrix& g) {
    t.accumulate(x, (g.cwiseProduct(x.value()) * 2.0f).eval());
  });
}

Tensor abs(const Tensor& x) {
  return x.tape().record(OpKind::kAbs, x.value().cwiseAbs(), {x}, [x](Tape& t, const Matrix& g) {
    Matrix sign = x.value().unaryExpr([](float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); });
    t.accumulate(x, g.cwiseProduct(sign));
  });
}

Tensor relu(const Tensor& x) {
  Matrix out = x.value().cwiseMax(0.0f);
  return x.tape().record(OpKind::kRelu, std::move(out), {x}, [x](Tape& t, const Matrix& g) {
    Matrix mask = x.value().unaryExpr([](float v) { return v > 0.0f ? 1.0f : 0.0f; });
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

Tensor leaky_relu(const Tensor& x, float alpha) {
  if (!(alpha > 0.0f && alpha < 1.0f)) throw DimensionError("leaky_relu: slope must lie in (0,1)");
  Matrix out = x.value().unaryExpr([alpha](float v) { return v >= 0.0f ? v : alpha * v; });
  return x.tape().record(OpKind::kLeakyRelu, std::move(out), {x}, [x, alpha](Tape& t, const Matrix& g) {
    Matrix slope = x.value().unaryExpr([alpha](float v) { return v >= 0.0f ? 1.0f : alpha; });
    t.accumulate(x, g.cwiseProduct(slope));
  });
}

Tensor softmax(const Tensor& x, int axis) {
  require_axis("softmax", axis);
  const Matrix& in = x.value();
  // Work on rows; transpose in and out for axis 0.
  Matrix rows = axis == 1 ? in : Matrix(in.transpose());
  softmax_rows(rows);
  Matrix out = axis == 1 ? std::move(rows) : Matrix(rows.transpose());
  return x.tape().record(OpKind::kSoftmax, std::move(out), {x}, [x, axis](Tape& t, const Matrix& g) {
    // y is recomputed from the input with the forward's exact arithmetic.
    const Matrix& in2 = x.value();
    Matrix y = axis == 1 ? in2 : Matrix(in2.transpose());
    Matrix gy = axis == 1 ? g : Matrix(g.transpose());
    Matrix gx(y.rows(), y.cols());
    softmax_rows(y);
    for (Index r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (Index c = 0; c < y.cols(); ++c) dot += static_cast<double>(gy(r, c)) * y(r, c);
      for (Index c = 0; c < y.cols(); ++c) gx(r, c) = y(r, c) * (gy(r, c) - static_cast<float>(dot));
    }
    if (axis == 1) t.accumulate(x, gx);
    else t.accumulate(x, gx.transpose());
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Index n = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != n || beta.rows() != 1 || beta.cols() != n) {
    throw DimensionError("layer_norm: gamma " + shape_of(gamma) + " / beta " + shape_of(beta) +
                         " do not match last dimension of " + shape_of(x));
  }
  const Matrix& in = x.value();
  Matrix xhat(in.rows(), n);
  Matrix rstd(in.rows(), 1);
  for (Index r = 0; r < in.rows(); ++r) {
    double mu = 0.0;
    for (Index c = 0; c < n; ++c) mu += in(r, c);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (Index c = 0; c < n; ++c) {
      const double d = in(r, c) - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    rstd(r, 0) = static_cast<float>(inv);
    for (Index c = 0; c < n; ++c) xhat(r, c) = static_cast<float>((in(r, c) - mu) * inv);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);

  return tape.record(OpKind::kLayerNorm, std::move(out), {x, gamma, beta},
                     [x, gamma, beta, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, const Matrix& g) {
                       const Index rows = g.rows();
                       const Index cols = g.cols();
                       if (gamma.requires_grad() || beta.requires_grad()) {
                         Matrix gg = Matrix::Zero(1, cols);
                         Matrix gb = Matrix::Zero(1, cols);
                         for (Index c = 0; c < cols; ++c) {
                           double ag = 0.0;
                           double ab = 0.0;
                           for (Index r = 0; r < rows; ++r) {
                             ag += static_cast<double>(g(r, c)) * xhat(r, c);
                             ab += g(r, c);
                           }
                           gg(0, c) = static_cast<float>(ag);
                           gb(0, c) = static_cast<float>(ab);
                         }
                         t.accumulate(gamma, gg);
                         t.accumulate(beta, gb);
                       }
                       if (x.requires_grad()) {
                         const auto& gam = gamma.value();
                         Matrix gx(rows, cols);
                         for (Index r = 0; r < rows; ++r) {
                           double m1 = 0.0;
                           double m2 = 0.0;
                           for (Index c = 0; c < cols; ++c) {
                             const double d = static_cast<double>(g(r, c)) * gam(0, c);
                             m1 += d;
                             m2 += d * xhat(r, c);
                           }
                           m1 /= static_cast<double>(cols);
                           m2 /= static_cast<double>(cols);
                           for (Index c = 0; c < cols; ++c) {
                             const double d = static_cast<double>(g(r, c)) * gam(0, c);
                             gx(r, c) = static_cast<float>(rstd(r, 0) * (d - m1 - xhat(r, c) * m2));
                           }
                         }
                         t.accumulate(x, gx);
                       }
                     });
}

}  // namespace jarcast
