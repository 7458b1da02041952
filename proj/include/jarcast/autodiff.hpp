#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "jarcast/types.hpp"

namespace jarcast {

// A trainable array that outlives any single tape. Gradients from every tape
// the parameter is bound to accumulate into `grad` until zero_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix init)
      : name(std::move(n)), value(std::move(init)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Index size() const { return value.size(); }
};

enum class OpKind {
  kLeaf,
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddBias,
  kSum,
  kMean,
  kConcat,
  kSlice,
  kTranspose,
  kExp,
  kSqrt,
  kSquare,
  kAbs,
  kSoftmax,
  kLayerNorm,
  kRelu,
  kLeakyRelu,
};

const char* op_name(OpKind kind);

class Tape;

// Handle to one node of a Tape. Cheap to copy; valid while the tape lives.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;
  // Value of a 1x1 tensor.
  float item() const;

  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Define-by-run reverse-mode graph. Nodes are appended in creation order, so
// the node sequence is already a topological order and backward() is a single
// reverse sweep that visits every node once.
//
// A tape supports exactly one backward(); build a new tape per forward pass.
// In Mode::kInference nothing requires gradients and no backward closures are
// stored.
class Tape {
 public:
  enum class Mode { kRecord, kInference };
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord; }

  Tensor constant(Matrix value);
  // Leaf viewing external storage; `value` must outlive the tape.
  Tensor constant_ref(const Matrix& value);
  // Leaf whose gradient is read back with grad().
  Tensor variable(Matrix value);
  // Leaf that views p.value and adds its gradient into p.grad on backward.
  Tensor parameter(Parameter& p);

  // Appends an op node. The closure is stored only when some input requires
  // gradients; it must route `out_grad` into inputs via accumulate().
  template <typename Fn>
  Tensor record(OpKind kind, Matrix value, std::initializer_list<Tensor> inputs, Fn&& fn) {
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    bool needs = false;
    for (const Tensor& t : inputs) {
      check_owner(t);
      ids.push_back(t.id_);
      needs = needs || nodes_[t.id_].requires_grad;
    }
    BackwardFn backward;
    if (needs && recording()) backward = std::forward<Fn>(fn);
    return push(kind, std::move(value), std::move(ids), needs && recording(), std::move(backward));
  }

  template <typename Fn>
  Tensor record(OpKind kind, Matrix value, const std::vector<Tensor>& inputs, Fn&& fn) {
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    bool needs = false;
    for (const Tensor& t : inputs) {
      check_owner(t);
      ids.push_back(t.id_);
      needs = needs || nodes_[t.id_].requires_grad;
    }
    BackwardFn backward;
    if (needs && recording()) backward = std::forward<Fn>(fn);
    return push(kind, std::move(value), std::move(ids), needs && recording(), std::move(backward));
  }

  // Adds g into the gradient buffer of t; no-op when t needs no gradient.
  template <typename Derived>
  void accumulate(const Tensor& t, const Eigen::MatrixBase<Derived>& g) {
    Node& node = nodes_[t.id_];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
  void backward(const Tensor& loss);

  // Gradient of the last backward() wrt t; zeros when t was not reached.
  Matrix grad(const Tensor& t) const;

  const Matrix& value(const Tensor& t) const { return value_of(nodes_[t.id_]); }
  bool requires_grad(const Tensor& t) const { return nodes_[t.id_].requires_grad; }
  const Matrix& value(std::size_t id) const { return value_of(nodes_.at(id)); }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    Matrix owned;
    const Matrix* view = nullptr;
    Matrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* sink = nullptr;
  };

  static const Matrix& value_of(const Node& n) { return n.view ? *n.view : n.owned; }
  void check_owner(const Tensor& t) const;
  Tensor push(OpKind kind, Matrix value, std::vector<std::size_t> inputs, bool requires_grad,
              BackwardFn backward);
  Tensor push_leaf(Node node);

  Mode mode_;
  bool consumed_ = false;
  // deque keeps node references stable while the graph grows.
  std::deque<Node> nodes_;
};

inline const Matrix& Tensor::value() const { return tape_->value(*this); }
inline bool Tensor::requires_grad() const { return tape_->requires_grad(*this); }

}  // namespace jarcast
