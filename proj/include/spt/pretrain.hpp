// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "spt/alteration.hpp"
#include "spt/encoder.hpp"
#include "spt/features.hpp"
#include "spt/rng.hpp"

#include <json.hpp>

namespace spt {

enum class LossScope { kFullSequence, kAlteredOnly };

const char* loss_scope_name(LossScope s);
LossScope loss_scope_from_name(const std::string& name);

struct TrainConfig {
  int64_t t_steps = 1000;
  int batch_size = 12;
  double peak_lr = 2e-4;
  double warmup_fraction = 0.07;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global-norm cap, <= 0 disables
  AlterationConfig alteration;
  ModelConfig model;
  uint64_t seed = 0;
  LossScope loss_scope = LossScope::kFullSequence;
  int64_t checkpoint_every = 0;  // 0 keeps only the final checkpoint

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct AdamState {
  std::vector<TensorF> m;
  std::vector<TensorF> v;
};

// One Adam update over a parameter group. t is the 1-indexed global step
// used for bias correction; moments and parameters are stored as float,
// update arithmetic runs in double.
void adam_update(const std::vector<TensorF*>& params, const std::vector<TensorF>& grads,
                 AdamState& st, int64_t t, double lr, double beta1, double beta2, double eps);

struct TrainState {
  int64_t step = 0;
  EncoderParams enc;
  HeadParams head;
  AdamState adam;
  std::array<uint64_t, 4> rng_state{};

  Rng rng() const { return Rng::from_state(rng_state); }
  void store_rng(const Rng& r) { rng_state = r.state(); }
};

TrainState init_train_state(const TrainConfig& cfg);

// Piecewise-linear warmup/decay; 0 at both endpoints, peak exactly at
// warmup_fraction * t_steps.
double lr_at_step(double step, int64_t t_steps, double peak_lr, double warmup_fraction);

// Mean absolute error over in-scope cells. full_sequence scope covers every
// cell of real frames; altered_only restricts to flagged frames/channels.
double l1_loss(const TensorF& pred, const TensorF& target, const std::vector<uint8_t>& pad_mask,
               LossScope scope, const AlterationRecord& rec);

struct StepResult {
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

// One optimizer update over a batch; the update that advances the state to
// step s uses lr_at_step(s).
StepResult train_step(TrainState& state, const std::vector<const FeatureMatrix*>& batch,
                      const TrainConfig& cfg, std::vector<AlterationRecord>* out_records = nullptr);

// Deterministic infinite data order: epoch e is the corpus permuted with
// seed mix_seed(cfg.seed, e); batch k covers stream positions [k*B, (k+1)*B).
std::vector<int> batch_indices(uint64_t seed, int corpus_size, int64_t step, int batch_size);

struct Checkpoint {
  TrainConfig cfg;
  TrainState state;
  std::vector<std::pair<int64_t, double>> loss_history;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

struct PretrainResult {
  std::string final_checkpoint;
  std::vector<std::pair<int64_t, double>> loss_history;
};

// Runs until cfg.t_steps, optionally resuming from an existing checkpoint.
// dump_alterations, when non-empty, receives the first batch's alteration
// records as JSON lines.
PretrainResult pretrain_run(const std::vector<FeatureMatrix>& corpus, const TrainConfig& cfg,
                            const std::string& checkpoint_dir, const std::string& resume_from = "",
                            const std::string& dump_alterations = "", std::ostream* log = nullptr);

}  // namespace spt
