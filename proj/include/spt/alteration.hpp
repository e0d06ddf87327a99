// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spt/rng.hpp"
#include "spt/tensor.hpp"

#include <json.hpp>

namespace spt {

enum class TimeModeDraw { kPerBlock, kPerUtterance };

struct AlterationConfig {
  double p_t = 0.15;
  int w_t = 7;
  int w_c = 8;
  double p_n = 0.15;
  double noise_variance = 0.2;
  bool enable_time = true;
  bool enable_channel = true;
  bool enable_magnitude = true;
  TimeModeDraw time_mode_draw = TimeModeDraw::kPerBlock;

  void validate() const;
};

enum class TimeBlockMode { kMaskZero, kReplace, kKeep };

const char* time_block_mode_name(TimeBlockMode m);

struct TimeBlock {
  int start = 0;
  int width = 0;
  TimeBlockMode mode = TimeBlockMode::kMaskZero;
  int replace_src = -1;  // source start for kReplace, else -1
};

struct ChannelBlock {
  int start = 0;
  int width = 0;
};

struct AlterationRecord {
  std::vector<TimeBlock> time_blocks;
  std::optional<ChannelBlock> channel_block;
  bool noise_applied = false;
  TensorF noise;  // empty unless noise_applied
  std::vector<uint8_t> altered_frame_flags;    // [L_x], union of time blocks
  std::vector<uint8_t> altered_channel_flags;  // [H_x], channel block
};

// Number of time alteration blocks: nearest integer of p_t * l_x / w_t,
// halves rounded away from zero.
int time_alteration_count(double p_t, int l_x, int w_t);

TensorF time_alteration(const TensorF& x, const AlterationConfig& cfg, Rng& rng, AlterationRecord& rec);
TensorF channel_alteration(const TensorF& x, const AlterationConfig& cfg, Rng& rng, AlterationRecord& rec);
TensorF magnitude_alteration(const TensorF& x, const AlterationConfig& cfg, Rng& rng, AlterationRecord& rec);

// Enabled stages in order time -> channel -> magnitude, each on the running
// result. Utterances shorter than w_t skip the time stage.
std::pair<TensorF, AlterationRecord> alter(const TensorF& x, const AlterationConfig& cfg, Rng& rng);

struct SpecAugmentConfig {
  int t = 70;
  int f = 4;
  int m_t = 2;
  int m_f = 2;
};

TensorF specaugment_mask(const TensorF& x, const SpecAugmentConfig& cfg, Rng& rng);

nlohmann::json record_to_json(const AlterationRecord& rec);

}  // namespace spt
