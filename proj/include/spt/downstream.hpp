// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spt/alteration.hpp"
#include "spt/pretrain.hpp"
#include "spt/probes.hpp"
#include "spt/transfer.hpp"

namespace spt {

// Pre-trained encoder plus a randomly initialized classifier. Frozen modes
// never route gradients into the encoder copy; finetune modes train it at
// the per-depth learning rate.
struct DownstreamModel {
  TransferConfig tc;
  ModelConfig mcfg;
  ProbeSpec spec;
  EncoderParams enc;
  TensorF ws_w;  // [n_layers], weighted-sum modes only
  TensorF ws_g;  // [1]
  TensorF cls_w1, cls_b1;  // linear: the only affine; hidden1: first affine
  TensorF cls_w2, cls_b2;  // hidden1 second affine, unused otherwise
  double encoder_lr = 0.0;
};

DownstreamModel build_downstream(const Checkpoint& ck, const TransferConfig& tc,
                                 const ProbeSpec& spec, uint64_t seed);

struct DownstreamResult {
  std::vector<double> loss_curve;  // one value per step
  double final_loss = 0.0;
  double test_accuracy = 0.0;
};

// Steps of Adam on batches of utterances drawn in seeded-shuffled epoch
// order. SpecAugment masking is applied to inputs in finetune modes only.
DownstreamResult train_downstream(DownstreamModel& model, const LabeledUtterances& train,
                                  const LabeledUtterances& test, int64_t steps, uint64_t seed,
                                  const SpecAugmentConfig& sa = {});

}  // namespace spt
