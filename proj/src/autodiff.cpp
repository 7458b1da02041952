#include "jarcast/autodiff.hpp"

namespace jarcast {
namespace {

// x - x is 0 for finite x and NaN for Inf/NaN; one vectorized reduction.
bool all_finite(const Matrix& m) { return m.size() == 0 || (m.array() - m.array()).sum() == 0.0f; }

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kExp: return "exp";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kSquare: return "square";
    case OpKind::kAbs: return "abs";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kLayerNorm: return "layer_norm";
    case OpKind::kRelu: return "relu";
    case OpKind::kLeakyRelu: return "leaky_relu";
  }
  return "unknown";
}

float Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionError("item() on non-scalar tensor " + shape_string(v.rows(), v.cols()));
  return v(0, 0);
}

void Tape::check_owner(const Tensor& t) const {
  if (t.tape_ != this) throw GraphError("tensor belongs to a different tape");
  if (consumed_) throw GraphError("tape already consumed by backward(); record a new graph");
}

Tensor Tape::push(OpKind kind, Matrix value, std::vector<std::size_t> inputs, bool requires_grad,
                  BackwardFn backward) {
  if (!all_finite(value)) {
    throw NonFiniteError(std::string("non-finite value produced by ") + op_name(kind) + " " +
                         shape_string(value.rows(), value.cols()));
  }
  Node& node = nodes_.emplace_back();
  node.kind = kind;
  node.owned = std::move(value);
  node.requires_grad = requires_grad;
  node.inputs = std::move(inputs);
  node.backward = std::move(backward);
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::push_leaf(Node node) {
  if (consumed_) throw GraphError("tape already consumed by backward(); record a new graph");
  if (!all_finite(value_of(node))) throw NonFiniteError("non-finite leaf value");
  nodes_.push_back(std::move(node));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  return push_leaf(std::move(n));
}

Tensor Tape::constant_ref(const Matrix& value) {
  Node n;
  n.view = &value;
  return push_leaf(std::move(n));
}

Tensor Tape::variable(Matrix value) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = recording();
  return push_leaf(std::move(n));
}

Tensor Tape::parameter(Parameter& p) {
  Node n;
  n.view = &p.value;
  n.requires_grad = recording();
  n.sink = recording() ? &p : nullptr;
  return push_leaf(std::move(n));
}

void Tape::backward(const Tensor& loss) {
  if (!recording()) throw GraphError("backward() on an inference tape");
  check_owner(loss);
  const Matrix& lv = value(loss);
  if (lv.size() != 1) {
    throw GraphError("backward() needs a scalar loss, got " + shape_string(lv.rows(), lv.cols()));
  }
  consumed_ = true;
  Node& root = nodes_[loss.id_];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.size() == 0) continue;
    if (node.backward) {
      node.backward(*this, node.grad);
    } else if (node.sink != nullptr) {
      node.sink->grad += node.grad;
    }
  }
}

Matrix Tape::grad(const Tensor& t) const {
  const Node& n = nodes_.at(t.id_);
  if (n.grad.size() == 0) {
    const Matrix& v = value_of(n);
    return Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

}  // namespace jarcast
