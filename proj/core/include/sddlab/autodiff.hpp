#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "sddlab/tensor.hpp"

namespace sddlab {

template <typename T>
class Tape;

enum class OpKind {
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Mul,
  Scale,
  Sum,
  Mean,
  AddRowVector,
  AddTiled,
  Softmax,
  LayerNorm,
  Gelu,
  Relu,
  CrossEntropy,
  PrependToken,
  SelectRows,
  MultiHeadAttention,
};

std::string_view op_name(OpKind kind);

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;

  Tape<T>* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor<T>& value() const { return tape_->value(*this); }
  const Shape& shape() const { return tape_->value(*this).shape(); }

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Wengert list. Operations append nodes in execution order, which is a
// topological order, so backward is a single reverse sweep that visits each
// node once. Nodes that do not depend on a requires_grad leaf store no
// backward closure.
template <typename T>
class Tape {
 public:
  // Propagates the output gradient of node `self` into its inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> leaf(Tensor<T> value) {
    const bool rg = value.requires_grad();
    return leaf(std::move(value), rg);
  }
  Var<T> leaf(Tensor<T> value, bool requires_grad);
  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  const Tensor<T>& value(Var<T> v) const { return node(v).value; }
  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }

  // Gradient of the last backward() root w.r.t. `v`; zeros when `v` was not
  // reached.
  Tensor<T> grad(Var<T> v) const;

  bool requires_grad(Var<T> v) const { return node(v).requires_grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Clears all gradients, seeds d(root)/d(root) = 1 and sweeps the tape in
  // reverse. Running it twice yields bit-identical gradients.
  void backward(Var<T> root);

  // Appends a node. `fn` is dropped when no input requires a gradient.
  Var<T> record(OpKind kind, Tensor<T> out, std::initializer_list<Var<T>> inputs,
                BackwardFn fn);

  bool any_requires_grad(std::initializer_list<Var<T>> inputs) const;

  // Accumulation target for node `id` (allocated as zeros on first use).
  std::span<T> grad_buffer(std::size_t id);
  // Upstream gradient of node `id` during backward.
  std::span<const T> out_grad(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    OpKind kind = OpKind::Leaf;
    Tensor<T> value;
    std::vector<T> grad;
    std::vector<std::size_t> inputs;
    bool requires_grad = false;
    BackwardFn backward;
  };

  const Node& node(Var<T> v) const;

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Every op checks shapes, raises NumericError on a
// non-finite result, and records its vector-Jacobian product on the tape of
// its inputs.

// [m x k] * [k x n] -> [m x n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b);

template <typename T>
Var<T> transpose(Var<T> a);

template <typename T>
Var<T> add(Var<T> a, Var<T> b);

template <typename T>
Var<T> sub(Var<T> a, Var<T> b);

// Elementwise product.
template <typename T>
Var<T> mul(Var<T> a, Var<T> b);

template <typename T>
Var<T> scale(Var<T> a, T factor);

// Sum / mean of all elements -> scalar.
template <typename T>
Var<T> sum(Var<T> a);

template <typename T>
Var<T> mean(Var<T> a);

// x[r, c] + b[c] for every row r of a rank-2 x.
template <typename T>
Var<T> add_row_vector(Var<T> x, Var<T> b);

// x is [groups*rows x cols], y is [rows x cols]; y is added to every group.
template <typename T>
Var<T> add_tiled(Var<T> x, Var<T> y);

// Max-subtracted softmax along `axis`.
template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis);

// Normalizes each row of a rank-2 x, then applies gamma * xhat + beta.
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps);

// Tanh approximation of GELU.
template <typename T>
Var<T> gelu(Var<T> x);

template <typename T>
Var<T> relu(Var<T> x);

// Mean over the batch of -log softmax(logits)[label].
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels);

// x is [batch*tokens x d]; returns [batch*(tokens+1) x d] with `token`
// (d values) inserted as the first row of each group.
template <typename T>
Var<T> prepend_token(Var<T> x, Var<T> token, std::size_t batch);

// Rows offset, offset+stride, offset+2*stride, ... of a rank-2 x.
template <typename T>
Var<T> select_rows(Var<T> x, std::size_t stride, std::size_t offset);

// Fused multi-head self-attention over a batch. q, k, v are
// [batch*tokens x d]; per sample and head h the columns
// [h*d/heads, (h+1)*d/heads) form that head's slice, and the result is
// softmax(q k^T / sqrt(d/heads)) v written back into the same columns.
template <typename T>
Var<T> multi_head_attention(Var<T> q, Var<T> k, Var<T> v, std::size_t batch,
                            std::size_t heads);

// ---------------------------------------------------------------------------
// Plain kernels shared by the ops and by tests.

// c[m x n] (+)= a[m x k] * b[k x n]
template <typename T>
void matmul_kernel(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
                   std::size_t k, std::size_t n, bool accumulate);

template <typename T>
T gelu_scalar(T x);

template <typename T>
T gelu_derivative(T x);

}  // namespace sddlab
