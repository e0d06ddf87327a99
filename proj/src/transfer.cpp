// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/transfer.hpp"

#include <algorithm>
#include <cmath>

namespace spt {

const char* transfer_mode_name(TransferMode m) {
  switch (m) {
    case TransferMode::kExtractLast: return "extract_last";
    case TransferMode::kExtractWs: return "extract_ws";
    case TransferMode::kFinetune: return "finetune";
    case TransferMode::kFinetuneWs: return "finetune_ws";
  }
  return "?";
}

TransferMode transfer_mode_from_name(const std::string& name) {
  if (name == "extract_last") return TransferMode::kExtractLast;
  if (name == "extract_ws") return TransferMode::kExtractWs;
  if (name == "finetune") return TransferMode::kFinetune;
  if (name == "finetune_ws") return TransferMode::kFinetuneWs;
  throw ConfigError("unknown transfer mode '" + name + "'");
}

double finetune_lr_for_depth(int n_layers) {
  if (n_layers < 1) throw ConfigError("finetune_lr_for_depth: n_layers must be >= 1");
  if (n_layers >= 24) {
    throw ValidationError("fine-tuning a " + std::to_string(n_layers) +
                          "-layer stack is refused: depths of 24 and beyond are too unstable to "
                          "fine-tune; use a frozen extraction mode instead");
  }
  return 2e-4 * 3.0 / static_cast<double>(n_layers);
}

std::vector<float> softmax_weights(const std::vector<float>& w) {
  if (w.empty()) throw ValidationError("softmax_weights: empty weight vector");
  float mx = w[0];
  for (float v : w) mx = std::max(mx, v);
  std::vector<float> s(w.size());
  double z = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    s[i] = std::exp(w[i] - mx);
    z += s[i];
  }
  for (auto& v : s) v = static_cast<float>(v / z);
  return s;
}

TensorF weighted_sum_layers(const std::vector<TensorF>& layers, const std::vector<float>& ws_weights,
                            float ws_scale) {
  if (layers.empty()) throw ValidationError("weighted_sum_layers: no layers");
  std::vector<float> w = ws_weights;
  if (w.empty()) w.assign(layers.size(), 0.0f);
  if (w.size() != layers.size()) {
    throw ValidationError("weighted_sum_layers: weight count does not match layer count");
  }
  const std::vector<float> s = softmax_weights(w);
  TensorF out = TensorF::zeros(layers[0].shape);
  for (size_t k = 0; k < layers.size(); ++k) {
    require_same_shape(layers[k], out, "weighted_sum_layers");
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += s[k] * layers[k].data[i];
  }
  for (auto& v : out.data) v *= ws_scale;
  return out;
}

TensorF extract_representation(const FeatureMatrix& x, const EncoderParams& enc,
                               const ModelConfig& cfg, const TransferConfig& tc) {
  x.validate();
  if (x.n_channels() != cfg.input_dim) {
    throw ValidationError("extract_representation: utterance " + x.utterance_id + " has " +
                          std::to_string(x.n_channels()) + " channels, model expects " +
                          std::to_string(cfg.input_dim));
  }
  if (!tc.frozen()) {
    throw ValidationError("extract_representation: fine-tune modes do not extract frozen features");
  }
  const std::vector<uint8_t> pad_mask(x.n_frames(), 1);
  const std::vector<TensorF> layers = encode(x.frames, enc, cfg, pad_mask);
  if (tc.mode == TransferMode::kExtractLast) return layers.back();
  return weighted_sum_layers(layers, tc.ws_weights, tc.ws_scale);
}

FeatureMatrix representation_as_feature(const FeatureMatrix& x, const TensorF& repr) {
  FeatureMatrix out;
  out.utterance_id = x.utterance_id;
  out.speaker_id = x.speaker_id;
  out.frames = repr;
  out.kind = FeatureKind::kOther;
  out.frame_shift_ms = x.frame_shift_ms;
  return out;
}

}  // namespace spt
