// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/encoder.hpp"

#include <cmath>

namespace spt {

const char* activation_name(Activation a) {
  return a == Activation::kGelu ? "gelu" : "relu";
}

Activation activation_from_name(const std::string& name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "relu") return Activation::kRelu;
  throw ConfigError("unknown activation '" + name + "'");
}

void ModelConfig::validate() const {
  if (n_layers < 1) throw ConfigError("model: n_layers must be >= 1");
  if (d_model < 1 || n_heads < 1 || d_ff < 1 || input_dim < 1) {
    throw ConfigError("model: all dimensions must be >= 1");
  }
  if (d_model % n_heads != 0) throw ConfigError("model: d_model must be divisible by n_heads");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model: dropout must lie in [0,1)");
}

ModelConfig model_preset(const std::string& name, int input_dim) {
  ModelConfig cfg;
  cfg.input_dim = input_dim;
  if (name == "base") {
    cfg.n_layers = 3;
  } else if (name == "medium") {
    cfg.n_layers = 6;
  } else if (name == "large") {
    cfg.n_layers = 12;
  } else if (name == "xlarge") {
    cfg.n_layers = 24;
  } else if (name == "micro") {
    cfg.n_layers = 2;
    cfg.d_model = 32;
    cfg.n_heads = 2;
    cfg.d_ff = 64;
  } else {
    throw ConfigError("unknown model preset '" + name + "'");
  }
  cfg.validate();
  return cfg;
}

std::vector<std::string> param_names(const ModelConfig& cfg, bool with_head) {
  std::vector<std::string> names{"enc.in.w", "enc.in.b"};
  static const char* layer_fields[] = {"wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                                       "ln1.g", "ln1.b", "ln2.g", "ln2.b", "ff.w1", "ff.b1",
                                       "ff.w2", "ff.b2"};
  for (int l = 0; l < cfg.n_layers; ++l) {
    for (const char* f : layer_fields) {
      names.push_back("enc.layer" + std::to_string(l) + "." + f);
    }
  }
  names.push_back("enc.final_ln.g");
  names.push_back("enc.final_ln.b");
  if (with_head) {
    names.insert(names.end(), {"head.w1", "head.b1", "head.w2", "head.b2"});
  }
  return names;
}

std::vector<TensorF*> flat_params(EncoderParams& enc, HeadParams* head) {
  std::vector<TensorF*> out{&enc.in_w, &enc.in_b};
  for (auto& l : enc.layers) {
    out.insert(out.end(), {&l.wq, &l.bq, &l.wk, &l.bk, &l.wv, &l.bv, &l.wo, &l.bo,
                           &l.ln1_g, &l.ln1_b, &l.ln2_g, &l.ln2_b, &l.w1, &l.b1, &l.w2, &l.b2});
  }
  out.push_back(&enc.final_ln_g);
  out.push_back(&enc.final_ln_b);
  if (head != nullptr) {
    out.insert(out.end(), {&head->w1, &head->b1, &head->w2, &head->b2});
  }
  return out;
}

std::vector<const TensorF*> flat_params(const EncoderParams& enc, const HeadParams* head) {
  auto mut = flat_params(const_cast<EncoderParams&>(enc), const_cast<HeadParams*>(head));
  return std::vector<const TensorF*>(mut.begin(), mut.end());
}

namespace {

TensorF gaussian_init(std::vector<int> shape, Rng& rng, double sd) {
  TensorF t = TensorF::zeros(std::move(shape));
  for (auto& v : t.data) v = static_cast<float>(rng.next_gaussian() * sd);
  return t;
}

}  // namespace

std::pair<EncoderParams, HeadParams> init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const double sd = 0.02;
  const int D = cfg.d_model, F = cfg.d_ff, H = cfg.input_dim;

  EncoderParams enc;
  enc.in_w = gaussian_init({H, D}, rng, sd);
  enc.in_b = TensorF::zeros({D});
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerParams lp;
    lp.wq = gaussian_init({D, D}, rng, sd);
    lp.bq = TensorF::zeros({D});
    lp.wk = gaussian_init({D, D}, rng, sd);
    lp.bk = TensorF::zeros({D});
    lp.wv = gaussian_init({D, D}, rng, sd);
    lp.bv = TensorF::zeros({D});
    lp.wo = gaussian_init({D, D}, rng, sd);
    lp.bo = TensorF::zeros({D});
    lp.ln1_g = TensorF::full({D}, 1.0f);
    lp.ln1_b = TensorF::zeros({D});
    lp.ln2_g = TensorF::full({D}, 1.0f);
    lp.ln2_b = TensorF::zeros({D});
    lp.w1 = gaussian_init({D, F}, rng, sd);
    lp.b1 = TensorF::zeros({F});
    lp.w2 = gaussian_init({F, D}, rng, sd);
    lp.b2 = TensorF::zeros({D});
    enc.layers.push_back(std::move(lp));
  }
  enc.final_ln_g = TensorF::full({D}, 1.0f);
  enc.final_ln_b = TensorF::zeros({D});

  HeadParams head;
  head.w1 = gaussian_init({D, D}, rng, sd);
  head.b1 = TensorF::zeros({D});
  head.w2 = gaussian_init({D, H}, rng, sd);
  head.b2 = TensorF::zeros({H});
  return {std::move(enc), std::move(head)};
}

int64_t encoder_layer_param_count(const ModelConfig& cfg) {
  const int64_t D = cfg.d_model, F = cfg.d_ff;
  return 4 * (D * D + D) + (D * F + F) + (F * D + D) + 2 * 2 * D;
}

int64_t encoder_param_count(const ModelConfig& cfg) {
  const int64_t D = cfg.d_model, H = cfg.input_dim;
  return (H * D + D) + cfg.n_layers * encoder_layer_param_count(cfg) + 2 * D;
}

int64_t head_param_count(const ModelConfig& cfg) {
  const int64_t D = cfg.d_model, H = cfg.input_dim;
  return (D * D + D) + (D * H + H);
}

TensorF position_encoding(int n_frames, int d_model) {
  TensorF pe = TensorF::zeros({n_frames, d_model});
  for (int t = 0; t < n_frames; ++t) {
    for (int i = 0; i < d_model / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / d_model);
      pe.at(t, 2 * i) = static_cast<float>(std::sin(t * freq));
      pe.at(t, 2 * i + 1) = static_cast<float>(std::cos(t * freq));
    }
    if (d_model % 2 == 1) {
      const double freq = std::pow(10000.0, -static_cast<double>(d_model - 1) / d_model);
      pe.at(t, d_model - 1) = static_cast<float>(std::sin(t * freq));
    }
  }
  return pe;
}

std::vector<TensorF> encode(const TensorF& xhat, const EncoderParams& enc, const ModelConfig& cfg,
                            const std::vector<uint8_t>& pad_mask) {
  GraphF g;
  auto fwd = build_forward<float>(g, cfg, flat_params(enc, nullptr), false, xhat, pad_mask,
                                  false, nullptr, false);
  std::vector<TensorF> out;
  out.reserve(fwd.layer_nodes.size());
  for (int id : fwd.layer_nodes) out.push_back(g.value(id));
  return out;
}

TensorF reconstruct(const TensorF& h_last, const HeadParams& head, const ModelConfig& cfg) {
  TensorF f = add_row(matmul(h_last, head.w1), head.b1);
  if (cfg.activation == Activation::kGelu) {
    for (auto& v : f.data) {
      const double x = v;
      v = static_cast<float>(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))));
    }
  } else {
    for (auto& v : f.data) v = v > 0.0f ? v : 0.0f;
  }
  return add_row(matmul(f, head.w2), head.b2);
}

}  // namespace spt
