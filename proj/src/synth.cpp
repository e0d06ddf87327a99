// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "spt/errors.hpp"
#include "spt/rng.hpp"

namespace spt {

namespace {

struct Chirp {
  double base;
  double slope;
};

// Mirrored pairs sweep the same center range in opposite directions, so the
// instantaneous center alone cannot separate them; identity needs direction,
// which only neighboring frames reveal.
std::vector<Chirp> phone_bank(int n_phones, int n_channels) {
  const double h = static_cast<double>(n_channels);
  std::vector<Chirp> bank = {
      {0.25 * h, +0.04 * h}, {0.65 * h, -0.04 * h}, {0.45 * h, 0.0},
      {0.32 * h, +0.015 * h}, {0.58 * h, -0.015 * h},
  };
  if (n_phones < 1 || n_phones > static_cast<int>(bank.size())) {
    throw ConfigError("make_synth_corpus: n_phones must be in [1, " +
                      std::to_string(bank.size()) + "]");
  }
  bank.resize(n_phones);
  return bank;
}

}  // namespace

SynthCorpus make_synth_corpus(const SynthConfig& cfg) {
  if (cfg.n_speakers < 1 || cfg.n_utterances < 1 || cfg.n_channels < 4) {
    throw ConfigError("make_synth_corpus: need speakers >= 1, utterances >= 1, channels >= 4");
  }
  if (cfg.min_len < cfg.min_segment || cfg.max_len < cfg.min_len ||
      cfg.max_segment < cfg.min_segment || cfg.min_segment < 1) {
    throw ConfigError("make_synth_corpus: bad length or segment bounds");
  }
  if (cfg.noise_sigma < 0.0) throw ConfigError("make_synth_corpus: noise_sigma must be >= 0");

  const std::vector<Chirp> phones = phone_bank(cfg.n_phones, cfg.n_channels);
  const int h = cfg.n_channels;

  // per-speaker smooth channel profile, fixed across that speaker's utterances
  std::vector<std::vector<float>> spk_profile(cfg.n_speakers, std::vector<float>(h));
  Rng prof_rng(mix_seed(cfg.seed, 0xa11ce));
  for (int s = 0; s < cfg.n_speakers; ++s) {
    const double dc = 0.5 * (prof_rng.next_double() - 0.5);
    const double amp = 0.3 + 0.2 * prof_rng.next_double();
    const double freq = 1.0 + prof_rng.next_double() * 2.0;
    const double phase = prof_rng.next_double() * 2.0 * 3.14159265358979323846;
    for (int c = 0; c < h; ++c) {
      spk_profile[s][c] = static_cast<float>(
          dc + amp * std::sin(2.0 * 3.14159265358979323846 * freq * c / h + phase));
    }
  }

  SynthCorpus corpus;
  Rng rng(cfg.seed);
  for (int u = 0; u < cfg.n_utterances; ++u) {
    const int spk = u % cfg.n_speakers;
    const int len = cfg.min_len + static_cast<int>(rng.next_below(
                                      static_cast<uint64_t>(cfg.max_len - cfg.min_len + 1)));
    TensorF x = TensorF::zeros({len, h});
    std::vector<int> labels(len, 0);
    int t = 0;
    while (t < len) {
      int seg = cfg.min_segment +
                static_cast<int>(rng.next_below(
                    static_cast<uint64_t>(cfg.max_segment - cfg.min_segment + 1)));
      seg = std::min(seg, len - t);
      const int phone = static_cast<int>(rng.next_below(static_cast<uint64_t>(phones.size())));
      const Chirp& ch = phones[phone];
      for (int i = 0; i < seg; ++i) {
        const double center = ch.base + ch.slope * i;
        for (int c = 0; c < h; ++c) {
          // Bump wider than the channel-mask band, so a masked band is
          // recoverable from the same frame's visible shoulders; trajectory
          // identity still needs neighboring frames.
          const double d = (c - center) / 3.0;
          x.at(t + i, c) = static_cast<float>(std::exp(-0.5 * d * d)) + spk_profile[spk][c] +
                           static_cast<float>(cfg.noise_sigma * rng.next_gaussian());
        }
        labels[t + i] = phone;
      }
      t += seg;
    }

    char uid[32], sid[32];
    std::snprintf(uid, sizeof uid, "utt_%04d", u);
    std::snprintf(sid, sizeof sid, "spk_%d", spk);
    FeatureMatrix fm;
    fm.utterance_id = uid;
    fm.speaker_id = sid;
    fm.frames = std::move(x);
    fm.kind = FeatureKind::kOther;
    fm.frame_shift_ms = 10.0f;
    fm.validate();
    corpus.feats.push_back(std::move(fm));
    corpus.phone_labels.push_back(std::move(labels));
    corpus.speaker_labels.push_back(spk);
  }
  return corpus;
}

LabeledUtterances synth_labels(const SynthCorpus& c, ProbeTask task) {
  LabeledUtterances out;
  for (size_t u = 0; u < c.feats.size(); ++u) {
    out.reprs.push_back(c.feats[u].frames);
    const int len = c.feats[u].frames.shape[0];
    switch (task) {
      case ProbeTask::kPhoneFrame:
        out.frame_labels.push_back(c.phone_labels[u]);
        break;
      case ProbeTask::kSpeakerFrame:
        out.frame_labels.emplace_back(len, c.speaker_labels[u]);
        break;
      case ProbeTask::kSpeakerUtterance:
        out.frame_labels.emplace_back();
        break;
    }
    out.utt_labels.push_back(c.speaker_labels[u]);
  }
  return out;
}

}  // namespace spt
