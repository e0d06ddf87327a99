// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/alteration.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "spt/errors.hpp"

namespace spt {

void AlterationConfig::validate() const {
  if (p_t < 0.0 || p_t > 1.0) throw ConfigError("alteration: p_t must lie in [0,1]");
  if (p_n < 0.0 || p_n > 1.0) throw ConfigError("alteration: p_n must lie in [0,1]");
  if (w_t < 1) throw ConfigError("alteration: w_t must be >= 1");
  if (w_c < 0) throw ConfigError("alteration: w_c must be >= 0");
  if (noise_variance < 0.0) throw ConfigError("alteration: noise_variance must be >= 0");
}

const char* time_block_mode_name(TimeBlockMode m) {
  switch (m) {
    case TimeBlockMode::kMaskZero: return "mask_zero";
    case TimeBlockMode::kReplace: return "replace";
    case TimeBlockMode::kKeep: return "keep";
  }
  return "?";
}

int time_alteration_count(double p_t, int l_x, int w_t) {
  if (w_t < 1) throw ConfigError("time_alteration_count: w_t must be >= 1");
  if (l_x < 0) throw ValidationError("time_alteration_count: negative frame count");
  return static_cast<int>(std::llround(p_t * static_cast<double>(l_x) / static_cast<double>(w_t)));
}

namespace {

void ensure_flags(AlterationRecord& rec, int l, int h) {
  if (rec.altered_frame_flags.empty()) rec.altered_frame_flags.assign(l, 0);
  if (rec.altered_channel_flags.empty()) rec.altered_channel_flags.assign(h, 0);
}

}  // namespace

TensorF time_alteration(const TensorF& x, const AlterationConfig& cfg, Rng& rng, AlterationRecord& rec) {
  cfg.validate();
  require_2d(x, "time_alteration");
  const int L = x.shape[0], H = x.shape[1];
  if (L < cfg.w_t) {
    throw ValidationError("time_alteration: utterance has " + std::to_string(L) +
                          " frames, shorter than block width " + std::to_string(cfg.w_t));
  }
  ensure_flags(rec, L, H);

  TensorF out = x;
  const int t_num = time_alteration_count(cfg.p_t, L, cfg.w_t);
  if (t_num == 0) return out;

  const int n_starts = L - cfg.w_t + 1;
  std::vector<int> starts;
  rng.sample_without_replacement(n_starts, std::min(t_num, n_starts), starts);

  TimeBlockMode utt_mode = TimeBlockMode::kMaskZero;
  if (cfg.time_mode_draw == TimeModeDraw::kPerUtterance) {
    const double u = rng.next_double();
    utt_mode = u < 0.8 ? TimeBlockMode::kMaskZero : (u < 0.9 ? TimeBlockMode::kReplace : TimeBlockMode::kKeep);
  }

  for (int start : starts) {
    TimeBlock blk;
    blk.start = start;
    blk.width = cfg.w_t;
    if (cfg.time_mode_draw == TimeModeDraw::kPerBlock) {
      const double u = rng.next_double();
      blk.mode = u < 0.8 ? TimeBlockMode::kMaskZero : (u < 0.9 ? TimeBlockMode::kReplace : TimeBlockMode::kKeep);
    } else {
      blk.mode = utt_mode;
    }
    switch (blk.mode) {
      case TimeBlockMode::kMaskZero:
        for (int t = start; t < start + cfg.w_t; ++t)
          for (int j = 0; j < H; ++j) out.at(t, j) = 0.0f;
        break;
      case TimeBlockMode::kReplace: {
        blk.replace_src = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_starts)));
        for (int t = 0; t < cfg.w_t; ++t)
          for (int j = 0; j < H; ++j) out.at(start + t, j) = x.at(blk.replace_src + t, j);
        break;
      }
      case TimeBlockMode::kKeep:
        break;
    }
    for (int t = start; t < start + cfg.w_t; ++t) rec.altered_frame_flags[t] = 1;
    rec.time_blocks.push_back(blk);
  }
  return out;
}

TensorF channel_alteration(const TensorF& x, const AlterationConfig& cfg, Rng& rng, AlterationRecord& rec) {
  cfg.validate();
  require_2d(x, "channel_alteration");
  const int L = x.shape[0], H = x.shape[1];
  if (H <= cfg.w_c) {
    throw ConfigError("channel_alteration: channel count " + std::to_string(H) +
                      " must exceed max width " + std::to_string(cfg.w_c));
  }
  ensure_flags(rec, L, H);

  TensorF out = x;
  const int width = static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.w_c) + 1));
  if (width == 0) return out;
  const int start = static_cast<int>(rng.next_below(static_cast<uint64_t>(H - width)));
  for (int t = 0; t < L; ++t)
    for (int j = start; j < start + width; ++j) out.at(t, j) = 0.0f;
  rec.channel_block = ChannelBlock{start, width};
  for (int j = start; j < start + width; ++j) rec.altered_channel_flags[j] = 1;
  return out;
}

TensorF magnitude_alteration(const TensorF& x, const AlterationConfig& cfg, Rng& rng, AlterationRecord& rec) {
  cfg.validate();
  require_2d(x, "magnitude_alteration");
  ensure_flags(rec, x.shape[0], x.shape[1]);

  TensorF out = x;
  if (rng.next_double() >= cfg.p_n) return out;
  rec.noise_applied = true;
  rec.noise = TensorF::zeros(x.shape);
  const float sd = static_cast<float>(std::sqrt(cfg.noise_variance));
  for (size_t i = 0; i < out.data.size(); ++i) {
    const float z = static_cast<float>(rng.next_gaussian()) * sd;
    rec.noise.data[i] = z;
    out.data[i] += z;
  }
  return out;
}

std::pair<TensorF, AlterationRecord> alter(const TensorF& x, const AlterationConfig& cfg, Rng& rng) {
  cfg.validate();
  require_2d(x, "alter");
  if (!cfg.enable_time && !cfg.enable_channel && !cfg.enable_magnitude) {
    throw ConfigError("alter: at least one alteration objective must be enabled");
  }
  AlterationRecord rec;
  ensure_flags(rec, x.shape[0], x.shape[1]);
  TensorF cur = x;
  if (cfg.enable_time && x.shape[0] >= cfg.w_t) {
    cur = time_alteration(cur, cfg, rng, rec);
  }
  if (cfg.enable_channel) {
    cur = channel_alteration(cur, cfg, rng, rec);
  }
  if (cfg.enable_magnitude) {
    cur = magnitude_alteration(cur, cfg, rng, rec);
  }
  return {std::move(cur), std::move(rec)};
}

TensorF specaugment_mask(const TensorF& x, const SpecAugmentConfig& cfg, Rng& rng) {
  require_2d(x, "specaugment_mask");
  if (cfg.t < 0 || cfg.f < 0 || cfg.m_t < 0 || cfg.m_f < 0) {
    throw ConfigError("specaugment_mask: parameters must be >= 0");
  }
  const int L = x.shape[0], H = x.shape[1];
  TensorF out = x;
  for (int m = 0; m < cfg.m_t; ++m) {
    int w = static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.t) + 1));
    w = std::min(w, L);
    if (w == 0) continue;
    const int start = static_cast<int>(rng.next_below(static_cast<uint64_t>(L - w) + 1));
    for (int t = start; t < start + w; ++t)
      for (int j = 0; j < H; ++j) out.at(t, j) = 0.0f;
  }
  for (int m = 0; m < cfg.m_f; ++m) {
    int w = static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.f) + 1));
    w = std::min(w, H);
    if (w == 0) continue;
    const int start = static_cast<int>(rng.next_below(static_cast<uint64_t>(H - w) + 1));
    for (int t = 0; t < L; ++t)
      for (int j = start; j < start + w; ++j) out.at(t, j) = 0.0f;
  }
  return out;
}

nlohmann::json record_to_json(const AlterationRecord& rec) {
  nlohmann::json j;
  j["time_blocks"] = nlohmann::json::array();
  for (const auto& b : rec.time_blocks) {
    nlohmann::json bj{{"start", b.start}, {"width", b.width}, {"mode", time_block_mode_name(b.mode)}};
    if (b.mode == TimeBlockMode::kReplace) bj["replace_src"] = b.replace_src;
    j["time_blocks"].push_back(std::move(bj));
  }
  if (rec.channel_block) {
    j["channel_block"] = {{"start", rec.channel_block->start}, {"width", rec.channel_block->width}};
  } else {
    j["channel_block"] = nullptr;
  }
  j["noise_applied"] = rec.noise_applied;
  j["altered_frames"] = nlohmann::json::array();
  for (size_t i = 0; i < rec.altered_frame_flags.size(); ++i) {
    if (rec.altered_frame_flags[i]) j["altered_frames"].push_back(i);
  }
  j["altered_channels"] = nlohmann::json::array();
  for (size_t i = 0; i < rec.altered_channel_flags.size(); ++i) {
    if (rec.altered_channel_flags[i]) j["altered_channels"].push_back(i);
  }
  return j;
}

}  // namespace spt
