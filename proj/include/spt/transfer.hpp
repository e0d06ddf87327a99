// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "spt/encoder.hpp"
#include "spt/features.hpp"
#include "spt/pretrain.hpp"

namespace spt {

enum class TransferMode { kExtractLast, kExtractWs, kFinetune, kFinetuneWs };

const char* transfer_mode_name(TransferMode m);
TransferMode transfer_mode_from_name(const std::string& name);

struct TransferConfig {
  TransferMode mode = TransferMode::kExtractLast;
  std::vector<float> ws_weights;  // one per layer; empty means equal
  float ws_scale = 1.0f;
  double finetune_lr = 0.0;  // 0 derives from depth

  bool frozen() const {
    return mode == TransferMode::kExtractLast || mode == TransferMode::kExtractWs;
  }
  bool weighted_sum() const {
    return mode == TransferMode::kExtractWs || mode == TransferMode::kFinetuneWs;
  }
};

// 2e-4 for 3 layers, halved every doubling of depth; 24-layer and deeper
// stacks are refused.
double finetune_lr_for_depth(int n_layers);

std::vector<float> softmax_weights(const std::vector<float>& w);

// gamma * sum_k softmax(w)_k * h_k over per-layer hidden states.
TensorF weighted_sum_layers(const std::vector<TensorF>& layers, const std::vector<float>& ws_weights,
                            float ws_scale);

// Frozen-mode representation of one utterance, [L_x, d_model].
TensorF extract_representation(const FeatureMatrix& x, const EncoderParams& enc,
                               const ModelConfig& cfg, const TransferConfig& tc);

FeatureMatrix representation_as_feature(const FeatureMatrix& x, const TensorF& repr);

}  // namespace spt
