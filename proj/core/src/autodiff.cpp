#include "sddlab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sddlab {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::Transpose: return "transpose";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::AddRowVector: return "add_row_vector";
    case OpKind::AddTiled: return "add_tiled";
    case OpKind::Softmax: return "softmax";
    case OpKind::LayerNorm: return "layer_norm";
    case OpKind::Gelu: return "gelu";
    case OpKind::Relu: return "relu";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::PrependToken: return "prepend_token";
    case OpKind::SelectRows: return "select_rows";
    case OpKind::MultiHeadAttention: return "multi_head_attention";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Tape

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  const std::size_t id = nodes_.size();
  value.set_requires_grad(requires_grad);
  value.set_tape_id(id);
  Node n;
  n.kind = OpKind::Leaf;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var<T>(this, id);
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(Var<T> v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw ContractError("variable does not belong to this tape");
  }
  return nodes_[v.id()];
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
  const Node& n = node(v);
  Tensor<T> out(n.value.shape());
  if (!n.grad.empty()) {
    std::copy(n.grad.begin(), n.grad.end(), out.data());
  }
  return out;
}

template <typename T>
bool Tape<T>::any_requires_grad(std::initializer_list<Var<T>> inputs) const {
  for (const Var<T>& v : inputs) {
    if (node(v).requires_grad) return true;
  }
  return false;
}

template <typename T>
Var<T> Tape<T>::record(OpKind kind, Tensor<T> out, std::initializer_list<Var<T>> inputs,
                       BackwardFn fn) {
  if (!out.all_finite()) {
    throw NumericError(std::string(op_name(kind)) + " produced a non-finite value");
  }
  const std::size_t id = nodes_.size();
  Node n;
  n.kind = kind;
  n.requires_grad = any_requires_grad(inputs);
  for (const Var<T>& v : inputs) n.inputs.push_back(v.id());
  out.set_requires_grad(n.requires_grad);
  out.set_tape_id(id);
  n.value = std::move(out);
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var<T>(this, id);
}

template <typename T>
std::span<T> Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), T(0));
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> root) {
  const Node& r = node(root);
  if (r.value.size() != 1) {
    throw ContractError("backward needs a scalar root, got shape " +
                        shape_string(r.value.shape()));
  }
  for (Node& n : nodes_) n.grad.clear();
  if (!r.requires_grad) return;
  grad_buffer(root.id())[0] = T(1);
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

template class Tape<float>;
template class Tape<double>;

// ---------------------------------------------------------------------------
// Kernels

template <typename T>
void matmul_kernel(std::span<const T> a, std::span<const T> b, std::span<T> c, std::size_t m,
                   std::size_t k, std::size_t n, bool accumulate) {
  if (!accumulate) std::fill(c.begin(), c.end(), T(0));
  const T* __restrict pa = a.data();
  const T* __restrict pb = b.data();
  T* __restrict pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    T* __restrict crow = pc + i * n;
    const T* __restrict arow = pa + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T s = arow[p];
      const T* __restrict brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += s * brow[j];
    }
  }
}

template <typename T>
T gelu_scalar(T x) {
  const T s = std::sqrt(T(2) / std::numbers::pi_v<T>);
  return T(0.5) * x * (T(1) + std::tanh(s * (x + T(0.044715) * x * x * x)));
}

template <typename T>
T gelu_derivative(T x) {
  const T s = std::sqrt(T(2) / std::numbers::pi_v<T>);
  const T th = std::tanh(s * (x + T(0.044715) * x * x * x));
  return T(0.5) * (T(1) + th) +
         T(0.5) * x * (T(1) - th * th) * s * (T(1) + T(3) * T(0.044715) * x * x);
}

namespace {

template <typename T>
void require_same_tape(Var<T> a, Var<T> b, std::string_view op) {
  if (!a.valid() || a.tape() != b.tape()) {
    throw ContractError(std::string(op) + ": operands live on different tapes");
  }
}

template <typename T>
void require_rank2(const Tensor<T>& t, std::string_view op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " +
                         shape_string(t.shape()));
  }
}

template <typename T>
std::vector<T> transposed(std::span<const T> a, std::size_t rows, std::size_t cols) {
  std::vector<T> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = a[r * cols + c];
  }
  return out;
}

template <typename T>
Var<T> elementwise_binary(OpKind kind, Var<T> a, Var<T> b) {
  require_same_tape(a, b, op_name(kind));
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  if (x.shape() != y.shape()) {
    throw DimensionError(std::string(op_name(kind)) + ": shapes " + shape_string(x.shape()) +
                         " and " + shape_string(y.shape()) + " differ");
  }
  Tensor<T> out(x.shape());
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case OpKind::Add: out[i] = x[i] + y[i]; break;
      case OpKind::Sub: out[i] = x[i] - y[i]; break;
      default: out[i] = x[i] * y[i]; break;
    }
  }
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(kind, std::move(out), {a, b}, [kind, ia, ib, n](Tape<T>& tape,
                                                                          std::size_t self) {
    auto g = tape.out_grad(self);
    if (tape.requires_grad(ia)) {
      auto ga = tape.grad_buffer(ia);
      const auto& yv = tape.value(ib);
      for (std::size_t i = 0; i < n; ++i) ga[i] += kind == OpKind::Mul ? g[i] * yv[i] : g[i];
    }
    if (tape.requires_grad(ib)) {
      auto gb = tape.grad_buffer(ib);
      const auto& xv = tape.value(ia);
      for (std::size_t i = 0; i < n; ++i) {
        gb[i] += kind == OpKind::Mul ? g[i] * xv[i] : (kind == OpKind::Sub ? -g[i] : g[i]);
      }
    }
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Ops

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "matmul");
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  const std::size_t m = x.extent(0);
  const std::size_t k = x.extent(1);
  const std::size_t n = y.extent(1);
  if (y.extent(0) != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(x.shape()) + " x " +
                         shape_string(y.shape()));
  }
  Tensor<T> out({m, n});
  matmul_kernel<T>(x.values(), y.values(), out.values(), m, k, n, false);
  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(OpKind::MatMul, std::move(out), {a, b},
                          [ia, ib, m, k, n](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            if (tape.requires_grad(ia)) {
                              // dA = dC * B^T
                              auto bt = transposed<T>(tape.value(ib).values(), k, n);
                              matmul_kernel<T>(g, bt, tape.grad_buffer(ia), m, n, k, true);
                            }
                            if (tape.requires_grad(ib)) {
                              // dB = A^T * dC
                              auto at = transposed<T>(tape.value(ia).values(), m, k);
                              matmul_kernel<T>(at, g, tape.grad_buffer(ib), k, m, n, true);
                            }
                          });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  const Tensor<T>& x = a.value();
  require_rank2(x, "transpose");
  const std::size_t rows = x.extent(0);
  const std::size_t cols = x.extent(1);
  Tensor<T> out({cols, rows}, transposed<T>(x.values(), rows, cols));
  const std::size_t ia = a.id();
  return a.tape()->record(OpKind::Transpose, std::move(out), {a},
                          [ia, rows, cols](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            auto ga = tape.grad_buffer(ia);
                            for (std::size_t r = 0; r < rows; ++r) {
                              for (std::size_t c = 0; c < cols; ++c) {
                                ga[r * cols + c] += g[c * rows + r];
                              }
                            }
                          });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return elementwise_binary(OpKind::Add, a, b);
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return elementwise_binary(OpKind::Sub, a, b);
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return elementwise_binary(OpKind::Mul, a, b);
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * factor;
  const std::size_t ia = a.id();
  return a.tape()->record(OpKind::Scale, std::move(out), {a},
                          [ia, factor](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            auto ga = tape.grad_buffer(ia);
                            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
                          });
}

template <typename T>
Var<T> sum(Var<T> a) {
  const Tensor<T>& x = a.value();
  T total = 0;
  for (T v : x.values()) total += v;
  const std::size_t ia = a.id();
  return a.tape()->record(OpKind::Sum, Tensor<T>::scalar(total), {a},
                          [ia](Tape<T>& tape, std::size_t self) {
                            const T g = tape.out_grad(self)[0];
                            for (T& v : tape.grad_buffer(ia)) v += g;
                          });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const Tensor<T>& x = a.value();
  T total = 0;
  for (T v : x.values()) total += v;
  const T inv = T(1) / static_cast<T>(x.size());
  const std::size_t ia = a.id();
  return a.tape()->record(OpKind::Mean, Tensor<T>::scalar(total * inv), {a},
                          [ia, inv](Tape<T>& tape, std::size_t self) {
                            const T g = tape.out_grad(self)[0] * inv;
                            for (T& v : tape.grad_buffer(ia)) v += g;
                          });
}

template <typename T>
Var<T> add_row_vector(Var<T> x, Var<T> b) {
  require_same_tape(x, b, "add_row_vector");
  const Tensor<T>& xv = x.value();
  const Tensor<T>& bv = b.value();
  require_rank2(xv, "add_row_vector");
  const std::size_t rows = xv.extent(0);
  const std::size_t cols = xv.extent(1);
  if (bv.size() != cols) {
    throw DimensionError("add_row_vector: vector of " + std::to_string(bv.size()) +
                         " values for " + std::to_string(cols) + " columns");
  }
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = xv[r * cols + c] + bv[c];
  }
  const std::size_t ix = x.id();
  const std::size_t ib = b.id();
  return x.tape()->record(OpKind::AddRowVector, std::move(out), {x, b},
                          [ix, ib, rows, cols](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            if (tape.requires_grad(ix)) {
                              auto gx = tape.grad_buffer(ix);
                              for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                            }
                            if (tape.requires_grad(ib)) {
                              auto gb = tape.grad_buffer(ib);
                              for (std::size_t r = 0; r < rows; ++r) {
                                for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
                              }
                            }
                          });
}

template <typename T>
Var<T> add_tiled(Var<T> x, Var<T> y) {
  require_same_tape(x, y, "add_tiled");
  const Tensor<T>& xv = x.value();
  const Tensor<T>& yv = y.value();
  require_rank2(xv, "add_tiled");
  require_rank2(yv, "add_tiled");
  const std::size_t block = yv.size();
  if (xv.extent(1) != yv.extent(1) || xv.extent(0) % yv.extent(0) != 0) {
    throw DimensionError("add_tiled: " + shape_string(yv.shape()) + " does not tile " +
                         shape_string(xv.shape()));
  }
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] + yv[i % block];
  const std::size_t ix = x.id();
  const std::size_t iy = y.id();
  return x.tape()->record(OpKind::AddTiled, std::move(out), {x, y},
                          [ix, iy, block](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            if (tape.requires_grad(ix)) {
                              auto gx = tape.grad_buffer(ix);
                              for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                            }
                            if (tape.requires_grad(iy)) {
                              auto gy = tape.grad_buffer(iy);
                              for (std::size_t i = 0; i < g.size(); ++i) gy[i % block] += g[i];
                            }
                          });
}

template <typename T>
Var<T> softmax(Var<T> x, std::size_t axis) {
  const Tensor<T>& xv = x.value();
  if (axis >= xv.rank() && !(xv.rank() == 0 && axis == 0)) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_string(xv.shape()));
  }
  const Shape& s = xv.shape();
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t i = 0; i < axis && i < s.size(); ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s.empty() ? 1 : s[axis];

  Tensor<T> out(xv.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * len * inner + in;
      T mx = xv[base];
      for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
      T z = 0;
      for (std::size_t j = 0; j < len; ++j) {
        const T e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= z;
    }
  }
  const std::size_t ix = x.id();
  return x.tape()->record(
      OpKind::Softmax, std::move(out), {x},
      [ix, outer, inner, len](Tape<T>& tape, std::size_t self) {
        auto g = tape.out_grad(self);
        const auto& y = tape.value(self);
        auto gx = tape.grad_buffer(ix);
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            T dot = 0;
            for (std::size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
            for (std::size_t j = 0; j < len; ++j) {
              const std::size_t idx = base + j * inner;
              gx[idx] += y[idx] * (g[idx] - dot);
            }
          }
        }
      });
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gamma, Var<T> beta, T eps) {
  require_same_tape(x, gamma, "layer_norm");
  require_same_tape(x, beta, "layer_norm");
  const Tensor<T>& xv = x.value();
  require_rank2(xv, "layer_norm");
  const std::size_t rows = xv.extent(0);
  const std::size_t cols = xv.extent(1);
  const Tensor<T>& gv = gamma.value();
  const Tensor<T>& bv = beta.value();
  if (gv.size() != cols || bv.size() != cols) {
    throw DimensionError("layer_norm: gamma/beta must have " + std::to_string(cols) +
                         " values");
  }
  const bool need_grad = x.tape()->any_requires_grad({x, gamma, beta});
  std::vector<T> xhat(xv.size());
  std::vector<T> rstd(rows);
  Tensor<T> out(xv.shape());
  const T inv_cols = T(1) / static_cast<T>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv.data() + r * cols;
    T mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += row[c];
    mu *= inv_cols;
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (row[c] - mu) * (row[c] - mu);
    var *= inv_cols;
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t c = 0; c < cols; ++c) {
      const T h = (row[c] - mu) * rs;
      xhat[r * cols + c] = h;
      out[r * cols + c] = gv[c] * h + bv[c];
    }
  }
  if (!need_grad) {
    return x.tape()->record(OpKind::LayerNorm, std::move(out), {x, gamma, beta}, nullptr);
  }
  const std::size_t ix = x.id();
  const std::size_t ig = gamma.id();
  const std::size_t ib = beta.id();
  return x.tape()->record(
      OpKind::LayerNorm, std::move(out), {x, gamma, beta},
      [ix, ig, ib, rows, cols, inv_cols, xhat = std::move(xhat), rstd = std::move(rstd)](
          Tape<T>& tape, std::size_t self) {
        auto g = tape.out_grad(self);
        const auto& gv = tape.value(ig);
        if (tape.requires_grad(ig)) {
          auto gg = tape.grad_buffer(ig);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) gg[c] += g[r * cols + c] * xhat[r * cols + c];
          }
        }
        if (tape.requires_grad(ib)) {
          auto gb = tape.grad_buffer(ib);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
          }
        }
        if (tape.requires_grad(ix)) {
          auto gx = tape.grad_buffer(ix);
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_d = 0;
            T mean_dx = 0;
            for (std::size_t c = 0; c < cols; ++c) {
              const T d = g[r * cols + c] * gv[c];
              mean_d += d;
              mean_dx += d * xhat[r * cols + c];
            }
            mean_d *= inv_cols;
            mean_dx *= inv_cols;
            for (std::size_t c = 0; c < cols; ++c) {
              const T d = g[r * cols + c] * gv[c];
              gx[r * cols + c] += rstd[r] * (d - mean_d - xhat[r * cols + c] * mean_dx);
            }
          }
        }
      });
}

template <typename T>
Var<T> gelu(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = gelu_scalar(xv[i]);
  const std::size_t ix = x.id();
  return x.tape()->record(OpKind::Gelu, std::move(out), {x},
                          [ix](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            const auto& xv = tape.value(ix);
                            auto gx = tape.grad_buffer(ix);
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              gx[i] += g[i] * gelu_derivative(xv[i]);
                            }
                          });
}

template <typename T>
Var<T> relu(Var<T> x) {
  const Tensor<T>& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  const std::size_t ix = x.id();
  return x.tape()->record(OpKind::Relu, std::move(out), {x},
                          [ix](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            const auto& xv = tape.value(ix);
                            auto gx = tape.grad_buffer(ix);
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              if (xv[i] > T(0)) gx[i] += g[i];
                            }
                          });
}

template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels) {
  const Tensor<T>& z = logits.value();
  require_rank2(z, "cross_entropy");
  const std::size_t batch = z.extent(0);
  const std::size_t classes = z.extent(1);
  if (labels.size() != batch) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(batch) + " rows");
  }
  std::vector<T> probs(z.size());
  T total = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw IndexError("cross_entropy: label " + std::to_string(label) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    const T* row = z.data() + b * classes;
    const T mx = *std::max_element(row, row + classes);
    T zsum = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const T e = std::exp(row[c] - mx);
      probs[b * classes + c] = e;
      zsum += e;
    }
    for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] /= zsum;
    total += mx + std::log(zsum) - row[label];
  }
  const T inv_batch = T(1) / static_cast<T>(batch);
  const std::size_t iz = logits.id();
  std::vector<int> saved(labels.begin(), labels.end());
  return logits.tape()->record(
      OpKind::CrossEntropy, Tensor<T>::scalar(total * inv_batch), {logits},
      [iz, classes, inv_batch, probs = std::move(probs), saved = std::move(saved)](
          Tape<T>& tape, std::size_t self) {
        const T g = tape.out_grad(self)[0] * inv_batch;
        auto gz = tape.grad_buffer(iz);
        for (std::size_t b = 0; b < saved.size(); ++b) {
          for (std::size_t c = 0; c < classes; ++c) {
            const T onehot = static_cast<std::size_t>(saved[b]) == c ? T(1) : T(0);
            gz[b * classes + c] += g * (probs[b * classes + c] - onehot);
          }
        }
      });
}

template <typename T>
Var<T> prepend_token(Var<T> x, Var<T> token, std::size_t batch) {
  require_same_tape(x, token, "prepend_token");
  const Tensor<T>& xv = x.value();
  require_rank2(xv, "prepend_token");
  const std::size_t d = xv.extent(1);
  if (batch == 0 || xv.extent(0) % batch != 0) {
    throw DimensionError("prepend_token: " + std::to_string(xv.extent(0)) +
                         " rows do not split into " + std::to_string(batch) + " samples");
  }
  if (token.value().size() != d) {
    throw DimensionError("prepend_token: token has " + std::to_string(token.value().size()) +
                         " values, rows have " + std::to_string(d));
  }
  const std::size_t tokens = xv.extent(0) / batch;
  Tensor<T> out({batch * (tokens + 1), d});
  const Tensor<T>& tv = token.value();
  for (std::size_t b = 0; b < batch; ++b) {
    T* dst = out.data() + b * (tokens + 1) * d;
    std::copy(tv.data(), tv.data() + d, dst);
    std::copy(xv.data() + b * tokens * d, xv.data() + (b + 1) * tokens * d, dst + d);
  }
  const std::size_t ix = x.id();
  const std::size_t it = token.id();
  return x.tape()->record(
      OpKind::PrependToken, std::move(out), {x, token},
      [ix, it, batch, tokens, d](Tape<T>& tape, std::size_t self) {
        auto g = tape.out_grad(self);
        if (tape.requires_grad(ix)) {
          auto gx = tape.grad_buffer(ix);
          for (std::size_t b = 0; b < batch; ++b) {
            const T* src = g.data() + (b * (tokens + 1) + 1) * d;
            T* dst = gx.data() + b * tokens * d;
            for (std::size_t i = 0; i < tokens * d; ++i) dst[i] += src[i];
          }
        }
        if (tape.requires_grad(it)) {
          auto gt = tape.grad_buffer(it);
          for (std::size_t b = 0; b < batch; ++b) {
            const T* src = g.data() + b * (tokens + 1) * d;
            for (std::size_t i = 0; i < d; ++i) gt[i] += src[i];
          }
        }
      });
}

template <typename T>
Var<T> select_rows(Var<T> x, std::size_t stride, std::size_t offset) {
  const Tensor<T>& xv = x.value();
  require_rank2(xv, "select_rows");
  const std::size_t rows = xv.extent(0);
  const std::size_t cols = xv.extent(1);
  if (stride == 0 || offset >= stride || rows % stride != 0) {
    throw DimensionError("select_rows: stride " + std::to_string(stride) + " / offset " +
                         std::to_string(offset) + " invalid for " + std::to_string(rows) +
                         " rows");
  }
  const std::size_t count = rows / stride;
  Tensor<T> out({count, cols});
  for (std::size_t i = 0; i < count; ++i) {
    const T* src = xv.data() + (i * stride + offset) * cols;
    std::copy(src, src + cols, out.data() + i * cols);
  }
  const std::size_t ix = x.id();
  return x.tape()->record(OpKind::SelectRows, std::move(out), {x},
                          [ix, stride, offset, count, cols](Tape<T>& tape, std::size_t self) {
                            auto g = tape.out_grad(self);
                            auto gx = tape.grad_buffer(ix);
                            for (std::size_t i = 0; i < count; ++i) {
                              T* dst = gx.data() + (i * stride + offset) * cols;
                              for (std::size_t c = 0; c < cols; ++c) dst[c] += g[i * cols + c];
                            }
                          });
}

template <typename T>
Var<T> multi_head_attention(Var<T> q, Var<T> k, Var<T> v, std::size_t batch,
                            std::size_t heads) {
  require_same_tape(q, k, "multi_head_attention");
  require_same_tape(q, v, "multi_head_attention");
  const Tensor<T>& qv = q.value();
  const Tensor<T>& kv = k.value();
  const Tensor<T>& vv = v.value();
  require_rank2(qv, "multi_head_attention");
  if (kv.shape() != qv.shape() || vv.shape() != qv.shape()) {
    throw DimensionError("multi_head_attention: q, k, v shapes differ");
  }
  const std::size_t rows = qv.extent(0);
  const std::size_t d = qv.extent(1);
  if (batch == 0 || rows % batch != 0 || heads == 0 || d % heads != 0) {
    throw DimensionError("multi_head_attention: " + shape_string(qv.shape()) +
                         " incompatible with batch " + std::to_string(batch) + " and " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t n = rows / batch;
  const std::size_t dh = d / heads;
  const T sc = T(1) / std::sqrt(static_cast<T>(dh));

  std::vector<T> probs(batch * heads * n * n);
  Tensor<T> out(qv.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      T* p = probs.data() + (b * heads + h) * n * n;
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < n; ++i) {
        const T* qi = qv.data() + (b * n + i) * d + c0;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
          const T* kj = kv.data() + (b * n + j) * d + c0;
          T s = 0;
          for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
          s *= sc;
          p[i * n + j] = s;
          mx = std::max(mx, s);
        }
        T z = 0;
        for (std::size_t j = 0; j < n; ++j) {
          p[i * n + j] = std::exp(p[i * n + j] - mx);
          z += p[i * n + j];
        }
        T* oi = out.data() + (b * n + i) * d + c0;
        for (std::size_t j = 0; j < n; ++j) {
          p[i * n + j] /= z;
          const T w = p[i * n + j];
          const T* vj = vv.data() + (b * n + j) * d + c0;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += w * vj[c];
        }
      }
    }
  }
  const std::size_t iq = q.id();
  const std::size_t ik = k.id();
  const std::size_t iv = v.id();
  return q.tape()->record(
      OpKind::MultiHeadAttention, std::move(out), {q, k, v},
      [iq, ik, iv, batch, heads, n, d, dh, sc, probs = std::move(probs)](Tape<T>& tape,
                                                                         std::size_t self) {
        auto g = tape.out_grad(self);
        const T* qd = tape.value(iq).data();
        const T* kd = tape.value(ik).data();
        const T* vd = tape.value(iv).data();
        const bool want_q = tape.requires_grad(iq);
        const bool want_k = tape.requires_grad(ik);
        const bool want_v = tape.requires_grad(iv);
        T* gq = want_q ? tape.grad_buffer(iq).data() : nullptr;
        T* gk = want_k ? tape.grad_buffer(ik).data() : nullptr;
        T* gv = want_v ? tape.grad_buffer(iv).data() : nullptr;
        std::vector<T> dp(n * n);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const T* p = probs.data() + (b * heads + h) * n * n;
            const std::size_t c0 = h * dh;
            for (std::size_t i = 0; i < n; ++i) {
              const T* gi = g.data() + (b * n + i) * d + c0;
              for (std::size_t j = 0; j < n; ++j) {
                const T* vj = vd + (b * n + j) * d + c0;
                T s = 0;
                for (std::size_t c = 0; c < dh; ++c) s += gi[c] * vj[c];
                dp[i * n + j] = s;
                if (want_v) {
                  T* gvj = gv + (b * n + j) * d + c0;
                  const T w = p[i * n + j];
                  for (std::size_t c = 0; c < dh; ++c) gvj[c] += w * gi[c];
                }
              }
            }
            if (!want_q && !want_k) continue;
            for (std::size_t i = 0; i < n; ++i) {
              T dot = 0;
              for (std::size_t j = 0; j < n; ++j) dot += p[i * n + j] * dp[i * n + j];
              const T* qi = qd + (b * n + i) * d + c0;
              for (std::size_t j = 0; j < n; ++j) {
                const T ds = p[i * n + j] * (dp[i * n + j] - dot) * sc;
                if (want_q) {
                  T* gqi = gq + (b * n + i) * d + c0;
                  const T* kj = kd + (b * n + j) * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gqi[c] += ds * kj[c];
                }
                if (want_k) {
                  T* gkj = gk + (b * n + j) * d + c0;
                  for (std::size_t c = 0; c < dh; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Explicit instantiations

#define SDDLAB_INSTANTIATE_OPS(T)                                                            \
  template void matmul_kernel<T>(std::span<const T>, std::span<const T>, std::span<T>,       \
                                 std::size_t, std::size_t, std::size_t, bool);               \
  template T gelu_scalar<T>(T);                                                              \
  template T gelu_derivative<T>(T);                                                          \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                                 \
  template Var<T> transpose<T>(Var<T>);                                                      \
  template Var<T> add<T>(Var<T>, Var<T>);                                                    \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                    \
  template Var<T> mul<T>(Var<T>, Var<T>);                                                    \
  template Var<T> scale<T>(Var<T>, T);                                                       \
  template Var<T> sum<T>(Var<T>);                                                            \
  template Var<T> mean<T>(Var<T>);                                                           \
  template Var<T> add_row_vector<T>(Var<T>, Var<T>);                                         \
  template Var<T> add_tiled<T>(Var<T>, Var<T>);                                              \
  template Var<T> softmax<T>(Var<T>, std::size_t);                                           \
  template Var<T> layer_norm<T>(Var<T>, Var<T>, Var<T>, T);                                  \
  template Var<T> gelu<T>(Var<T>);                                                           \
  template Var<T> relu<T>(Var<T>);                                                           \
  template Var<T> cross_entropy<T>(Var<T>, std::span<const int>);                            \
  template Var<T> prepend_token<T>(Var<T>, Var<T>, std::size_t);                             \
  template Var<T> select_rows<T>(Var<T>, std::size_t, std::size_t);                          \
  template Var<T> multi_head_attention<T>(Var<T>, Var<T>, Var<T>, std::size_t, std::size_t);

SDDLAB_INSTANTIATE_OPS(float)
SDDLAB_INSTANTIATE_OPS(double)

#undef SDDLAB_INSTANTIATE_OPS

}  // namespace sddlab
