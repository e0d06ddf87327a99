// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spt/graph.hpp"
#include "spt/rng.hpp"
#include "spt/tensor.hpp"

namespace spt {

enum class Activation { kGelu, kRelu };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct ModelConfig {
  int n_layers = 3;
  int d_model = 768;
  int n_heads = 12;
  int d_ff = 3072;
  int input_dim = 80;
  double dropout = 0.1;
  Activation activation = Activation::kGelu;
  bool pre_layer_norm = false;
  bool use_position_encoding = true;

  void validate() const;
  int d_head() const { return d_model / n_heads; }
};

// Named sizes; micro is the desk-scale config used by the test suites.
ModelConfig model_preset(const std::string& name, int input_dim);

struct LayerParams {
  TensorF wq, bq, wk, bk, wv, bv, wo, bo;
  TensorF ln1_g, ln1_b, ln2_g, ln2_b;
  TensorF w1, b1, w2, b2;
};

struct EncoderParams {
  TensorF in_w, in_b;  // input projection [H_x, d_model], [d_model]
  std::vector<LayerParams> layers;
  TensorF final_ln_g, final_ln_b;
};

struct HeadParams {
  TensorF w1, b1;  // [d_model, d_model], [d_model]
  TensorF w2, b2;  // [d_model, H_x], [H_x]
};

std::pair<EncoderParams, HeadParams> init_params(const ModelConfig& cfg, uint64_t seed);

// Flat views over all trainable tensors, encoder first then head; the order
// is the contract for optimizer moments, checkpoints, and graph leaves.
std::vector<TensorF*> flat_params(EncoderParams& enc, HeadParams* head);
std::vector<const TensorF*> flat_params(const EncoderParams& enc, const HeadParams* head);
std::vector<std::string> param_names(const ModelConfig& cfg, bool with_head);

int64_t encoder_layer_param_count(const ModelConfig& cfg);
int64_t encoder_param_count(const ModelConfig& cfg);
int64_t head_param_count(const ModelConfig& cfg);

// Sinusoidal position table, [n_frames, d_model].
TensorF position_encoding(int n_frames, int d_model);

template <typename T>
struct ForwardNodes {
  std::vector<int> param_ids;    // aligned with flat_params order
  std::vector<int> layer_nodes;  // one hidden state per layer; back() is the
                                 // final-layer-norm output
  int last_node = -1;
  int recon_node = -1;  // head output, -1 when built without the head
};

namespace detail {

template <typename T>
Tensor<T> dropout_mask(const std::vector<int>& shape, double p, Rng& rng) {
  Tensor<T> m = Tensor<T>::zeros(shape);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  for (auto& v : m.data) v = rng.next_double() < p ? T(0) : keep_scale;
  return m;
}

}  // namespace detail

// One leaf per tensor in `params` (flat order), named per param_names.
template <typename T>
std::vector<int> make_param_leaves(Graph<T>& g, const ModelConfig& cfg,
                                   const std::vector<const TensorF*>& params, bool requires_grad,
                                   bool with_head) {
  const std::vector<std::string> names = param_names(cfg, with_head);
  if (names.size() != params.size()) {
    throw ValidationError("make_param_leaves: parameter list does not match config");
  }
  std::vector<int> ids;
  ids.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    ids.push_back(g.leaf(params[i]->template cast<T>(), names[i], requires_grad));
  }
  return ids;
}

// Builds the full forward pass over one utterance on existing parameter
// leaves (shared across a batch). pad_mask marks real frames; padded key
// positions get a -1e9 attention bias. Dropout masks are drawn from
// drop_rng only in train_mode.
template <typename T>
ForwardNodes<T> build_forward_with(Graph<T>& g, const ModelConfig& cfg,
                                   const std::vector<int>& param_ids, const Tensor<T>& xhat,
                                   const std::vector<uint8_t>& pad_mask, bool train_mode,
                                   Rng* drop_rng, bool with_head) {
  cfg.validate();
  const int L = xhat.shape[0];
  const int D = cfg.d_model;
  const int dk = cfg.d_head();
  if (xhat.ndim() != 2 || xhat.shape[1] != cfg.input_dim) {
    throw ValidationError("build_forward: input shape " + xhat.shape_str() + " does not match input_dim");
  }
  if (static_cast<int>(pad_mask.size()) != L) {
    throw ValidationError("build_forward: pad_mask length does not match frame count");
  }
  if (param_names(cfg, with_head).size() != param_ids.size()) {
    throw ValidationError("build_forward: parameter list does not match config");
  }

  ForwardNodes<T> out;
  out.param_ids = param_ids;
  auto pid = [&](size_t i) { return out.param_ids[i]; };

  const bool drop = train_mode && cfg.dropout > 0.0;
  if (drop && drop_rng == nullptr) {
    throw ValidationError("build_forward: train_mode with dropout needs an rng");
  }
  auto apply_dropout = [&](int node) {
    if (!drop) return node;
    int m = g.constant(detail::dropout_mask<T>(g.value(node).shape, cfg.dropout, *drop_rng), "dropout_mask");
    return g.mul(node, m);
  };

  // attention bias shared by every layer and head
  Tensor<T> bias = Tensor<T>::zeros({L, L});
  for (int j = 0; j < L; ++j) {
    if (!pad_mask[j]) {
      for (int i = 0; i < L; ++i) bias.at(i, j) = T(-1e9);
    }
  }
  const int attn_bias = g.constant(std::move(bias), "attn_pad_bias");

  int x = g.constant(xhat, "x_altered");
  int h = g.add_row(g.matmul(x, pid(0)), pid(1));
  if (cfg.use_position_encoding) {
    h = g.add(h, g.constant(position_encoding(L, D).template cast<T>(), "position_table"));
  }
  h = apply_dropout(h);

  size_t p = 2;
  const T inv_sqrt_dk = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dk)));
  for (int layer = 0; layer < cfg.n_layers; ++layer) {
    const int wq = pid(p + 0), bq = pid(p + 1), wk = pid(p + 2), bk = pid(p + 3);
    const int wv = pid(p + 4), bv = pid(p + 5), wo = pid(p + 6), bo = pid(p + 7);
    const int l1g = pid(p + 8), l1b = pid(p + 9), l2g = pid(p + 10), l2b = pid(p + 11);
    const int w1 = pid(p + 12), b1 = pid(p + 13), w2 = pid(p + 14), b2 = pid(p + 15);
    p += 16;

    auto attention = [&](int hin) {
      int q = g.add_row(g.matmul(hin, wq), bq);
      int k = g.add_row(g.matmul(hin, wk), bk);
      int v = g.add_row(g.matmul(hin, wv), bv);
      std::vector<int> heads;
      heads.reserve(cfg.n_heads);
      for (int hd = 0; hd < cfg.n_heads; ++hd) {
        const int j0 = hd * dk, j1 = (hd + 1) * dk;
        int qh = g.slice_cols(q, j0, j1);
        int kh = g.slice_cols(k, j0, j1);
        int vh = g.slice_cols(v, j0, j1);
        int scores = g.add(g.scale(g.matmul_nt(qh, kh), inv_sqrt_dk), attn_bias);
        heads.push_back(g.matmul(g.softmax_rows(scores), vh));
      }
      int ctx = g.concat_cols(heads);
      return apply_dropout(g.add_row(g.matmul(ctx, wo), bo));
    };
    auto feed_forward = [&](int hin) {
      int f = g.add_row(g.matmul(hin, w1), b1);
      f = cfg.activation == Activation::kGelu ? g.gelu(f) : g.relu(f);
      return apply_dropout(g.add_row(g.matmul(f, w2), b2));
    };

    if (cfg.pre_layer_norm) {
      h = g.add(h, attention(g.layer_norm(h, l1g, l1b)));
      h = g.add(h, feed_forward(g.layer_norm(h, l2g, l2b)));
    } else {
      h = g.layer_norm(g.add(h, attention(h)), l1g, l1b);
      h = g.layer_norm(g.add(h, feed_forward(h)), l2g, l2b);
    }
    out.layer_nodes.push_back(h);
  }

  h = g.layer_norm(h, pid(p), pid(p + 1));
  p += 2;
  out.layer_nodes.back() = h;
  out.last_node = h;

  if (with_head) {
    int f = g.add_row(g.matmul(h, pid(p)), pid(p + 1));
    f = cfg.activation == Activation::kGelu ? g.gelu(f) : g.relu(f);
    out.recon_node = g.add_row(g.matmul(f, pid(p + 2)), pid(p + 3));
  }
  return out;
}

// Convenience wrapper for a single utterance: records leaves, then forwards.
template <typename T>
ForwardNodes<T> build_forward(Graph<T>& g, const ModelConfig& cfg,
                              const std::vector<const TensorF*>& params, bool requires_grad,
                              const Tensor<T>& xhat, const std::vector<uint8_t>& pad_mask,
                              bool train_mode, Rng* drop_rng, bool with_head) {
  const std::vector<int> ids = make_param_leaves(g, cfg, params, requires_grad, with_head);
  return build_forward_with(g, cfg, ids, xhat, pad_mask, train_mode, drop_rng, with_head);
}

// Plain evaluation forward (no tape): all layers' hidden states.
std::vector<TensorF> encode(const TensorF& xhat, const EncoderParams& enc, const ModelConfig& cfg,
                            const std::vector<uint8_t>& pad_mask);

// Head applied to a hidden-state matrix.
TensorF reconstruct(const TensorF& h_last, const HeadParams& head, const ModelConfig& cfg);

}  // namespace spt
