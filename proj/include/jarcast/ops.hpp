#pragma once

#include <vector>

#include "jarcast/autodiff.hpp"

// Differentiable primitives over 2-D float tensors. Vectors are 1xN rows
// unless stated otherwise; a batch is stacked along rows.
//
// Reductions accumulate in double, sequentially in row-major order, so a
// given input always produces the same bits.
namespace jarcast {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float factor);
// x + bias, with a 1xN bias broadcast over every row of x.
Tensor add_bias(const Tensor& x, const Tensor& bias);

// Full reduction to 1x1.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// axis 0 collapses rows (result 1xN), axis 1 collapses columns (result Mx1).
Tensor sum(const Tensor& x, int axis);
Tensor mean(const Tensor& x, int axis);

// axis 1 (default) joins side by side, axis 0 stacks vertically.
Tensor concat(const std::vector<Tensor>& parts, int axis = 1);
Tensor slice(const Tensor& x, Index row, Index rows, Index col, Index cols);
Tensor transpose(const Tensor& x);

Tensor exp(const Tensor& x);
// The subgradient at 0 is taken as 0.
Tensor sqrt(const Tensor& x);
Tensor square(const Tensor& x);
// sign(0) = 0.
Tensor abs(const Tensor& x);
Tensor relu(const Tensor& x);
// max(alpha*x, x) for alpha in (0,1); derivative 1 at x == 0.
Tensor leaky_relu(const Tensor& x, float alpha);

// Max-subtracted softmax along `axis` (1 = within each row).
Tensor softmax(const Tensor& x, int axis = 1);
// Per-row normalization with population variance, eps inside the root.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, float eps = 1e-5f);

}  // namespace jarcast
