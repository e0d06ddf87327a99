// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "spt/errors.hpp"
#include "spt/tensor.hpp"

namespace spt {

// Define-by-run reverse-mode tape. Handles are indices into the node list;
// insertion order is a valid topological order, so backward is a single
// reverse sweep.
template <typename T>
class Graph {
 public:
  enum class Op {
    kLeaf,
    kConstant,
    kMatmul,
    kMatmulNT,
    kTranspose,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddRow,
    kSliceCols,
    kConcatCols,
    kGelu,
    kRelu,
    kTanh,
    kLayerNorm,
    kSoftmaxRows,
    kSum,
    kMeanRows,
    kAbsSumMasked,
    kSoftmaxXent,
    kWsCombine,
  };

  struct Node {
    Op op;
    std::string name;
    std::vector<int> inputs;
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    T scalar = T(0);
    int j0 = 0, j1 = 0;
    std::vector<int> labels;
    std::vector<Tensor<T>> aux;
  };

  int size() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[check(id)]; }
  const Tensor<T>& value(int id) const { return nodes_[check(id)].value; }
  const Tensor<T>& grad(int id) const {
    const Node& n = nodes_[check(id)];
    if (!n.grad_alloc) throw ValidationError("graph: node '" + n.name + "' has no gradient");
    return n.grad;
  }

  int leaf(Tensor<T> v, std::string name, bool requires_grad = true) {
    Node n;
    n.op = Op::kLeaf;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    n.name = std::move(name);
    return push(std::move(n));
  }

  int constant(Tensor<T> v, std::string name = "") {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(v);
    n.requires_grad = false;
    n.name = std::move(name);
    return push(std::move(n));
  }

  int matmul(int a, int b) {
    Node n = binary(Op::kMatmul, a, b);
    n.value = spt::matmul(val(a), val(b));
    return push(std::move(n));
  }

  int matmul_nt(int a, int b) {
    Node n = binary(Op::kMatmulNT, a, b);
    n.value = spt::matmul_nt(val(a), val(b));
    return push(std::move(n));
  }

  int transpose(int a) {
    Node n = unary(Op::kTranspose, a);
    n.value = spt::transpose(val(a));
    return push(std::move(n));
  }

  int add(int a, int b) {
    Node n = binary(Op::kAdd, a, b);
    n.value = spt::add(val(a), val(b));
    return push(std::move(n));
  }

  int sub(int a, int b) {
    Node n = binary(Op::kSub, a, b);
    n.value = spt::sub(val(a), val(b));
    return push(std::move(n));
  }

  int mul(int a, int b) {
    Node n = binary(Op::kMul, a, b);
    n.value = spt::mul(val(a), val(b));
    return push(std::move(n));
  }

  int scale(int a, T s) {
    Node n = unary(Op::kScale, a);
    n.scalar = s;
    n.value = spt::scale(val(a), s);
    return push(std::move(n));
  }

  int add_row(int x, int bias) {
    Node n = binary(Op::kAddRow, x, bias);
    n.value = spt::add_row(val(x), val(bias));
    return push(std::move(n));
  }

  // y = x[:, j0:j1)
  int slice_cols(int x, int j0, int j1) {
    const Tensor<T>& v = val(x);
    require_2d(v, "slice_cols");
    if (j0 < 0 || j1 <= j0 || j1 > v.shape[1]) throw ValidationError("slice_cols: bad column range");
    Node n = unary(Op::kSliceCols, x);
    n.j0 = j0;
    n.j1 = j1;
    n.value = Tensor<T>::zeros({v.shape[0], j1 - j0});
    for (int i = 0; i < v.shape[0]; ++i)
      for (int j = j0; j < j1; ++j) n.value.at(i, j - j0) = v.at(i, j);
    return push(std::move(n));
  }

  int concat_cols(const std::vector<int>& xs) {
    if (xs.empty()) throw ValidationError("concat_cols: no inputs");
    int rows = val(xs[0]).shape[0];
    int cols = 0;
    for (int x : xs) {
      const Tensor<T>& v = val(x);
      require_2d(v, "concat_cols");
      if (v.shape[0] != rows) throw ValidationError("concat_cols: row mismatch");
      cols += v.shape[1];
    }
    Node n;
    n.op = Op::kConcatCols;
    n.inputs = xs;
    for (int x : xs) n.requires_grad = n.requires_grad || nodes_[check(x)].requires_grad;
    n.value = Tensor<T>::zeros({rows, cols});
    int off = 0;
    for (int x : xs) {
      const Tensor<T>& v = val(x);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < v.shape[1]; ++j) n.value.at(i, off + j) = v.at(i, j);
      off += v.shape[1];
    }
    return push(std::move(n));
  }

  int gelu(int a) {
    Node n = unary(Op::kGelu, a);
    n.value = val(a);
    for (auto& v : n.value.data) {
      const double x = static_cast<double>(v);
      v = static_cast<T>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
    }
    return push(std::move(n));
  }

  int relu(int a) {
    Node n = unary(Op::kRelu, a);
    n.value = val(a);
    for (auto& v : n.value.data) v = v > T(0) ? v : T(0);
    return push(std::move(n));
  }

  int tanh(int a) {
    Node n = unary(Op::kTanh, a);
    n.value = val(a);
    for (auto& v : n.value.data) v = std::tanh(v);
    return push(std::move(n));
  }

  int layer_norm(int x, int gain, int bias, T eps = T(1e-12)) {
    const Tensor<T>& v = val(x);
    require_2d(v, "layer_norm");
    const int L = v.shape[0], H = v.shape[1];
    Node n;
    n.op = Op::kLayerNorm;
    n.inputs = {x, gain, bias};
    n.scalar = eps;
    n.requires_grad = nodes_[check(x)].requires_grad || nodes_[check(gain)].requires_grad ||
                      nodes_[check(bias)].requires_grad;
    Tensor<T> xhat = Tensor<T>::zeros({L, H});
    Tensor<T> inv = Tensor<T>::zeros({L});
    n.value = Tensor<T>::zeros({L, H});
    const Tensor<T>& g = val(gain);
    const Tensor<T>& b = val(bias);
    if (g.ndim() != 1 || g.shape[0] != H || b.ndim() != 1 || b.shape[0] != H) {
      throw ValidationError("layer_norm: gain/bias must be [H]");
    }
    for (int i = 0; i < L; ++i) {
      T mean = 0;
      for (int j = 0; j < H; ++j) mean += v.at(i, j);
      mean /= T(H);
      T var = 0;
      for (int j = 0; j < H; ++j) {
        const T d = v.at(i, j) - mean;
        var += d * d;
      }
      var /= T(H);
      const T iv = T(1) / std::sqrt(var + eps);
      inv.data[i] = iv;
      for (int j = 0; j < H; ++j) {
        const T xh = (v.at(i, j) - mean) * iv;
        xhat.at(i, j) = xh;
        n.value.at(i, j) = g.data[j] * xh + b.data[j];
      }
    }
    n.aux.push_back(std::move(xhat));
    n.aux.push_back(std::move(inv));
    return push(std::move(n));
  }

  int softmax_rows(int a) {
    Node n = unary(Op::kSoftmaxRows, a);
    n.value = spt::softmax_rows(val(a));
    return push(std::move(n));
  }

  int sum(int a) {
    Node n = unary(Op::kSum, a);
    n.value = Tensor<T>::scalar(sum_all(val(a)));
    return push(std::move(n));
  }

  int mean_rows(int a) {
    const Tensor<T>& v = val(a);
    require_2d(v, "mean_rows");
    Node n = unary(Op::kMeanRows, a);
    n.value = Tensor<T>::zeros({1, v.shape[1]});
    for (int i = 0; i < v.shape[0]; ++i)
      for (int j = 0; j < v.shape[1]; ++j) n.value.at(0, j) += v.at(i, j);
    for (int j = 0; j < v.shape[1]; ++j) n.value.at(0, j) /= T(v.shape[0]);
    return push(std::move(n));
  }

  // sum over cells with mask != 0 of |pred - target|. target and mask are
  // plain tensors, not nodes; gradient flows into pred only.
  int abs_sum_masked(int pred, const Tensor<T>& target, const Tensor<T>& mask) {
    const Tensor<T>& p = val(pred);
    require_same_shape(p, target, "abs_sum_masked");
    require_same_shape(p, mask, "abs_sum_masked");
    Node n = unary(Op::kAbsSumMasked, pred);
    T s = 0;
    for (size_t i = 0; i < p.data.size(); ++i) {
      if (mask.data[i] != T(0)) s += std::abs(p.data[i] - target.data[i]);
    }
    n.value = Tensor<T>::scalar(s);
    n.aux.push_back(target);
    n.aux.push_back(mask);
    return push(std::move(n));
  }

  // mean over rows of -log softmax(logits_i)[labels_i]
  int softmax_xent(int logits, std::vector<int> labels) {
    const Tensor<T>& z = val(logits);
    require_2d(z, "softmax_xent");
    if (static_cast<int>(labels.size()) != z.shape[0]) {
      throw ValidationError("softmax_xent: label count does not match rows");
    }
    for (int y : labels) {
      if (y < 0 || y >= z.shape[1]) throw ValidationError("softmax_xent: label out of range");
    }
    Node n = unary(Op::kSoftmaxXent, logits);
    n.labels = std::move(labels);
    Tensor<T> probs = spt::softmax_rows(z);
    T loss = 0;
    for (int i = 0; i < z.shape[0]; ++i) {
      const T p = std::max(probs.at(i, n.labels[i]), std::numeric_limits<T>::min());
      loss -= std::log(p);
    }
    loss /= T(z.shape[0]);
    n.value = Tensor<T>::scalar(loss);
    n.aux.push_back(std::move(probs));
    return push(std::move(n));
  }

  // y = gamma * sum_k softmax(w)_k * layer_k. Inputs: K layer tensors [L,H],
  // then w [K], then gamma [1].
  int ws_combine(const std::vector<int>& layers, int w, int gamma) {
    if (layers.empty()) throw ValidationError("ws_combine: no layers");
    const int K = static_cast<int>(layers.size());
    const Tensor<T>& wv = val(w);
    if (wv.ndim() != 1 || wv.shape[0] != K) throw ValidationError("ws_combine: weight vector must be [K]");
    const Tensor<T>& gv = val(gamma);
    if (gv.numel() != 1) throw ValidationError("ws_combine: gamma must be a scalar");
    const int L = val(layers[0]).shape[0], H = val(layers[0]).shape[1];
    Node n;
    n.op = Op::kWsCombine;
    n.inputs = layers;
    n.inputs.push_back(w);
    n.inputs.push_back(gamma);
    for (int x : n.inputs) n.requires_grad = n.requires_grad || nodes_[check(x)].requires_grad;
    Tensor<T> s = Tensor<T>::zeros({K});
    T mx = wv.data[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, wv.data[k]);
    T z = 0;
    for (int k = 0; k < K; ++k) {
      s.data[k] = std::exp(wv.data[k] - mx);
      z += s.data[k];
    }
    for (int k = 0; k < K; ++k) s.data[k] /= z;
    n.value = Tensor<T>::zeros({L, H});
    for (int k = 0; k < K; ++k) {
      const Tensor<T>& h = val(layers[k]);
      if (h.shape[0] != L || h.shape[1] != H) throw ValidationError("ws_combine: layer shape mismatch");
      for (size_t i = 0; i < n.value.data.size(); ++i) n.value.data[i] += s.data[k] * h.data[i];
    }
    n.aux.push_back(std::move(s));
    const T gsc = gv.data[0];
    for (auto& v : n.value.data) v *= gsc;
    return push(std::move(n));
  }

  void backward(int loss) {
    Node& ln = nodes_[check(loss)];
    if (ln.value.numel() != 1) throw ValidationError("backward: loss must be a scalar");
    if (!ln.requires_grad) throw ValidationError("backward: loss does not depend on any trainable leaf");
    ensure_grad(loss);
    ln.grad.data[0] = T(1);
    for (int id = loss; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !n.grad_alloc) continue;
      step_backward(n);
    }
  }

  // Scans nodes in insertion order and reports the first with a non-finite
  // value; forward order pins blame on the op that created the fault.
  void check_finite_or_throw() const {
    for (const Node& n : nodes_) {
      if (!n.value.all_finite()) {
        throw NumericFault("non-finite value produced by node '" + describe(n) + "'");
      }
    }
  }

 private:
  std::vector<Node> nodes_;

  int check(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) throw ValidationError("graph: bad node handle");
    return id;
  }

  const Tensor<T>& val(int id) const { return nodes_[check(id)].value; }

  int push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
  }

  Node unary(Op op, int a) {
    Node n;
    n.op = op;
    n.inputs = {check(a)};
    n.requires_grad = nodes_[a].requires_grad;
    return n;
  }

  Node binary(Op op, int a, int b) {
    Node n;
    n.op = op;
    n.inputs = {check(a), check(b)};
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    return n;
  }

  void ensure_grad(int id) {
    Node& n = nodes_[id];
    if (!n.grad_alloc) {
      n.grad = Tensor<T>::zeros(n.value.shape);
      n.grad_alloc = true;
    }
  }

  // Accumulate g into input node `id` if it wants gradients.
  void accum(int id, const Tensor<T>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    ensure_grad(id);
    for (size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
  }

  static std::string op_name(Op op) {
    switch (op) {
      case Op::kLeaf: return "leaf";
      case Op::kConstant: return "constant";
      case Op::kMatmul: return "matmul";
      case Op::kMatmulNT: return "matmul_nt";
      case Op::kTranspose: return "transpose";
      case Op::kAdd: return "add";
      case Op::kSub: return "sub";
      case Op::kMul: return "mul";
      case Op::kScale: return "scale";
      case Op::kAddRow: return "add_row";
      case Op::kSliceCols: return "slice_cols";
      case Op::kConcatCols: return "concat_cols";
      case Op::kGelu: return "gelu";
      case Op::kRelu: return "relu";
      case Op::kTanh: return "tanh";
      case Op::kLayerNorm: return "layer_norm";
      case Op::kSoftmaxRows: return "softmax_rows";
      case Op::kSum: return "sum";
      case Op::kMeanRows: return "mean_rows";
      case Op::kAbsSumMasked: return "abs_sum_masked";
      case Op::kSoftmaxXent: return "softmax_xent";
      case Op::kWsCombine: return "ws_combine";
    }
    return "?";
  }

  static std::string describe(const Node& n) {
    return n.name.empty() ? op_name(n.op) : n.name + " (" + op_name(n.op) + ")";
  }

  void step_backward(Node& n) {
    const Tensor<T>& dy = n.grad;
    switch (n.op) {
      case Op::kLeaf:
      case Op::kConstant:
        break;
      case Op::kMatmul: {
        const Tensor<T>& a = val(n.inputs[0]);
        const Tensor<T>& b = val(n.inputs[1]);
        if (nodes_[n.inputs[0]].requires_grad) accum(n.inputs[0], spt::matmul_nt(dy, b));
        if (nodes_[n.inputs[1]].requires_grad) accum(n.inputs[1], spt::matmul_tn(a, dy));
        break;
      }
      case Op::kMatmulNT: {
        const Tensor<T>& a = val(n.inputs[0]);
        const Tensor<T>& b = val(n.inputs[1]);
        if (nodes_[n.inputs[0]].requires_grad) accum(n.inputs[0], spt::matmul(dy, b));
        if (nodes_[n.inputs[1]].requires_grad) accum(n.inputs[1], spt::matmul_tn(dy, a));
        break;
      }
      case Op::kTranspose:
        accum(n.inputs[0], spt::transpose(dy));
        break;
      case Op::kAdd:
        accum(n.inputs[0], dy);
        accum(n.inputs[1], dy);
        break;
      case Op::kSub: {
        accum(n.inputs[0], dy);
        if (nodes_[n.inputs[1]].requires_grad) accum(n.inputs[1], spt::scale(dy, T(-1)));
        break;
      }
      case Op::kMul: {
        if (nodes_[n.inputs[0]].requires_grad) accum(n.inputs[0], spt::mul(dy, val(n.inputs[1])));
        if (nodes_[n.inputs[1]].requires_grad) accum(n.inputs[1], spt::mul(dy, val(n.inputs[0])));
        break;
      }
      case Op::kScale:
        accum(n.inputs[0], spt::scale(dy, n.scalar));
        break;
      case Op::kAddRow: {
        accum(n.inputs[0], dy);
        if (nodes_[n.inputs[1]].requires_grad) {
          Tensor<T> db = Tensor<T>::zeros({dy.shape[1]});
          for (int i = 0; i < dy.shape[0]; ++i)
            for (int j = 0; j < dy.shape[1]; ++j) db.data[j] += dy.at(i, j);
          accum(n.inputs[1], db);
        }
        break;
      }
      case Op::kSliceCols: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T> dx = Tensor<T>::zeros(x.shape);
        for (int i = 0; i < dy.shape[0]; ++i)
          for (int j = 0; j < dy.shape[1]; ++j) dx.at(i, n.j0 + j) = dy.at(i, j);
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kConcatCols: {
        int off = 0;
        for (int id : n.inputs) {
          const Tensor<T>& x = val(id);
          if (nodes_[id].requires_grad) {
            Tensor<T> dx = Tensor<T>::zeros(x.shape);
            for (int i = 0; i < x.shape[0]; ++i)
              for (int j = 0; j < x.shape[1]; ++j) dx.at(i, j) = dy.at(i, off + j);
            accum(id, dx);
          }
          off += x.shape[1];
        }
        break;
      }
      case Op::kGelu: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T> dx = dy;
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
        for (size_t i = 0; i < dx.data.size(); ++i) {
          const double xv = static_cast<double>(x.data[i]);
          const double cdf = 0.5 * (1.0 + std::erf(xv * inv_sqrt2));
          const double pdf = inv_sqrt2pi * std::exp(-0.5 * xv * xv);
          dx.data[i] = static_cast<T>(static_cast<double>(dx.data[i]) * (cdf + xv * pdf));
        }
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kRelu: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.data.size(); ++i) {
          if (x.data[i] <= T(0)) dx.data[i] = T(0);
        }
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kTanh: {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dx.data.size(); ++i) {
          const T y = n.value.data[i];
          dx.data[i] *= (T(1) - y * y);
        }
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kLayerNorm: {
        const Tensor<T>& xhat = n.aux[0];
        const Tensor<T>& inv = n.aux[1];
        const Tensor<T>& g = val(n.inputs[1]);
        const int L = dy.shape[0], H = dy.shape[1];
        if (nodes_[n.inputs[1]].requires_grad) {
          Tensor<T> dg = Tensor<T>::zeros({H});
          for (int i = 0; i < L; ++i)
            for (int j = 0; j < H; ++j) dg.data[j] += dy.at(i, j) * xhat.at(i, j);
          accum(n.inputs[1], dg);
        }
        if (nodes_[n.inputs[2]].requires_grad) {
          Tensor<T> db = Tensor<T>::zeros({H});
          for (int i = 0; i < L; ++i)
            for (int j = 0; j < H; ++j) db.data[j] += dy.at(i, j);
          accum(n.inputs[2], db);
        }
        if (nodes_[n.inputs[0]].requires_grad) {
          Tensor<T> dx = Tensor<T>::zeros({L, H});
          for (int i = 0; i < L; ++i) {
            T m1 = 0, m2 = 0;
            for (int j = 0; j < H; ++j) {
              const T dxh = dy.at(i, j) * g.data[j];
              m1 += dxh;
              m2 += dxh * xhat.at(i, j);
            }
            m1 /= T(H);
            m2 /= T(H);
            for (int j = 0; j < H; ++j) {
              const T dxh = dy.at(i, j) * g.data[j];
              dx.at(i, j) = inv.data[i] * (dxh - m1 - xhat.at(i, j) * m2);
            }
          }
          accum(n.inputs[0], dx);
        }
        break;
      }
      case Op::kSoftmaxRows: {
        const Tensor<T>& s = n.value;
        Tensor<T> dx = Tensor<T>::zeros(s.shape);
        for (int i = 0; i < s.shape[0]; ++i) {
          T dot = 0;
          for (int j = 0; j < s.shape[1]; ++j) dot += dy.at(i, j) * s.at(i, j);
          for (int j = 0; j < s.shape[1]; ++j) dx.at(i, j) = s.at(i, j) * (dy.at(i, j) - dot);
        }
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kSum: {
        const Tensor<T>& x = val(n.inputs[0]);
        accum(n.inputs[0], Tensor<T>::full(x.shape, dy.data[0]));
        break;
      }
      case Op::kMeanRows: {
        const Tensor<T>& x = val(n.inputs[0]);
        Tensor<T> dx = Tensor<T>::zeros(x.shape);
        const T s = T(1) / T(x.shape[0]);
        for (int i = 0; i < x.shape[0]; ++i)
          for (int j = 0; j < x.shape[1]; ++j) dx.at(i, j) = dy.at(0, j) * s;
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kAbsSumMasked: {
        const Tensor<T>& p = val(n.inputs[0]);
        const Tensor<T>& target = n.aux[0];
        const Tensor<T>& mask = n.aux[1];
        Tensor<T> dx = Tensor<T>::zeros(p.shape);
        for (size_t i = 0; i < p.data.size(); ++i) {
          if (mask.data[i] == T(0)) continue;
          const T d = p.data[i] - target.data[i];
          dx.data[i] = dy.data[0] * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
        }
        accum(n.inputs[0], dx);
        break;
      }
      case Op::kSoftmaxXent: {
        const Tensor<T>& probs = n.aux[0];
        Tensor<T> dz = probs;
        const T s = dy.data[0] / T(probs.shape[0]);
        for (int i = 0; i < probs.shape[0]; ++i) {
          dz.at(i, n.labels[i]) -= T(1);
          for (int j = 0; j < probs.shape[1]; ++j) dz.at(i, j) *= s;
        }
        accum(n.inputs[0], dz);
        break;
      }
      case Op::kWsCombine: {
        const int K = static_cast<int>(n.inputs.size()) - 2;
        const int wid = n.inputs[K];
        const int gid = n.inputs[K + 1];
        const Tensor<T>& s = n.aux[0];
        const T gsc = val(gid).data[0];
        std::vector<T> dot(K, T(0));
        for (int k = 0; k < K; ++k) {
          const Tensor<T>& h = val(n.inputs[k]);
          T d = 0;
          for (size_t i = 0; i < h.data.size(); ++i) d += dy.data[i] * h.data[i];
          dot[k] = d;
          if (nodes_[n.inputs[k]].requires_grad) {
            accum(n.inputs[k], spt::scale(dy, gsc * s.data[k]));
          }
        }
        if (nodes_[gid].requires_grad) {
          T dg = 0;
          for (int k = 0; k < K; ++k) dg += s.data[k] * dot[k];
          Tensor<T> t = val(gid);
          t.data[0] = dg;
          accum(gid, t);
        }
        if (nodes_[wid].requires_grad) {
          T mixed = 0;
          for (int k = 0; k < K; ++k) mixed += s.data[k] * dot[k];
          Tensor<T> dw = Tensor<T>::zeros({K});
          for (int k = 0; k < K; ++k) dw.data[k] = gsc * s.data[k] * (dot[k] - mixed);
          accum(wid, dw);
        }
        break;
      }
    }
  }
};

using GraphF = Graph<float>;
using GraphD = Graph<double>;

}  // namespace spt
