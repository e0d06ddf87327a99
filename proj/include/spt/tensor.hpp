// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "spt/errors.hpp"

namespace spt {

// Dense row-major tensor. Rank 1 or 2 is all the encoder needs.
template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<int64_t>(data.size()) != numel_of(shape)) {
      throw ValidationError("tensor: data length does not match shape");
    }
  }

  static int64_t numel_of(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      if (d <= 0) throw ValidationError("tensor: shape entries must be positive");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) {
    const int64_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<T>(static_cast<size_t>(n), T(0)));
  }

  static Tensor full(std::vector<int> s, T v) {
    const int64_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<T>(static_cast<size_t>(n), v));
  }

  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int ndim() const { return static_cast<int>(shape.size()); }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const {
    if (shape.size() == 1) return 1;
    return shape.size() >= 2 ? shape[1] : 0;
  }

  T& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  T at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  T& operator[](size_t i) { return data[i]; }
  T operator[](size_t i) const { return data[i]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

namespace detail {
template <typename T>
using EigenMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<EigenMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const EigenMat<T>>;
}  // namespace detail

template <typename T>
inline void require_2d(const Tensor<T>& x, const char* who) {
  if (x.ndim() != 2) throw ValidationError(std::string(who) + ": expected a 2-D tensor, got " + x.shape_str());
}

// c = a @ b
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.shape[1] != b.shape[0]) {
    throw ValidationError("matmul: inner dims differ, " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<T> c = Tensor<T>::zeros({a.shape[0], b.shape[1]});
  detail::ConstMatMap<T> ma(a.data.data(), a.shape[0], a.shape[1]);
  detail::ConstMatMap<T> mb(b.data.data(), b.shape[0], b.shape[1]);
  detail::MatMap<T> mc(c.data.data(), c.shape[0], c.shape[1]);
  mc.noalias() = ma * mb;
  return c;
}

// c = a @ b^T
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.shape[1] != b.shape[1]) {
    throw ValidationError("matmul_nt: inner dims differ, " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<T> c = Tensor<T>::zeros({a.shape[0], b.shape[0]});
  detail::ConstMatMap<T> ma(a.data.data(), a.shape[0], a.shape[1]);
  detail::ConstMatMap<T> mb(b.data.data(), b.shape[0], b.shape[1]);
  detail::MatMap<T> mc(c.data.data(), c.shape[0], c.shape[1]);
  mc.noalias() = ma * mb.transpose();
  return c;
}

// c = a^T @ b
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a, "matmul_tn");
  require_2d(b, "matmul_tn");
  if (a.shape[0] != b.shape[0]) {
    throw ValidationError("matmul_tn: inner dims differ, " + a.shape_str() + " vs " + b.shape_str());
  }
  Tensor<T> c = Tensor<T>::zeros({a.shape[1], b.shape[1]});
  detail::ConstMatMap<T> ma(a.data.data(), a.shape[0], a.shape[1]);
  detail::ConstMatMap<T> mb(b.data.data(), b.shape[0], b.shape[1]);
  detail::MatMap<T> mc(c.data.data(), c.shape[0], c.shape[1]);
  mc.noalias() = ma.transpose() * mb;
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_2d(a, "transpose");
  Tensor<T> c = Tensor<T>::zeros({a.shape[1], a.shape[0]});
  for (int i = 0; i < a.shape[0]; ++i)
    for (int j = 0; j < a.shape[1]; ++j) c.at(j, i) = a.at(i, j);
  return c;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* who) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(who) + ": shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
  }
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> c = a;
  for (auto& v : c.data) v *= s;
  return c;
}

// [L,H] + [H], broadcast over rows.
template <typename T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& bias) {
  require_2d(x, "add_row");
  if (bias.ndim() != 1 || bias.shape[0] != x.shape[1]) {
    throw ValidationError("add_row: bias shape " + bias.shape_str() + " does not match " + x.shape_str());
  }
  Tensor<T> c = x;
  for (int i = 0; i < x.shape[0]; ++i)
    for (int j = 0; j < x.shape[1]; ++j) c.at(i, j) += bias.data[j];
  return c;
}

// Row-wise standardization followed by per-channel affine. eps sits inside
// the square root so a constant row maps to the bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-12)) {
  require_2d(x, "layer_norm");
  const int L = x.shape[0], H = x.shape[1];
  if (gain.ndim() != 1 || gain.shape[0] != H || bias.ndim() != 1 || bias.shape[0] != H) {
    throw ValidationError("layer_norm: gain/bias must be [H]");
  }
  if (eps <= T(0)) throw ValidationError("layer_norm: eps must be > 0");
  Tensor<T> y = Tensor<T>::zeros({L, H});
  for (int i = 0; i < L; ++i) {
    T mean = 0;
    for (int j = 0; j < H; ++j) mean += x.at(i, j);
    mean /= T(H);
    T var = 0;
    for (int j = 0; j < H; ++j) {
      const T d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= T(H);
    const T inv = T(1) / std::sqrt(var + eps);
    for (int j = 0; j < H; ++j) {
      y.at(i, j) = gain.data[j] * ((x.at(i, j) - mean) * inv) + bias.data[j];
    }
  }
  return y;
}

// Row-wise softmax with max subtraction.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  require_2d(x, "softmax_rows");
  const int L = x.shape[0], K = x.shape[1];
  Tensor<T> y = Tensor<T>::zeros({L, K});
  for (int i = 0; i < L; ++i) {
    T mx = x.at(i, 0);
    for (int j = 1; j < K; ++j) mx = std::max(mx, x.at(i, j));
    T sum = 0;
    for (int j = 0; j < K; ++j) {
      const T e = std::exp(x.at(i, j) - mx);
      y.at(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < K; ++j) y.at(i, j) /= sum;
  }
  return y;
}

template <typename T>
T sum_all(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data) s += v;
  return s;
}

template <typename T>
double l2_norm(const Tensor<T>& a) {
  double s = 0;
  for (T v : a.data) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

}  // namespace spt
