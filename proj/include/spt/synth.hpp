// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <vector>

#include "spt/features.hpp"
#include "spt/probes.hpp"

namespace spt {

// Seeded synthetic corpus with probe ground truth. Each "phone" is a chirp:
// a Gaussian spectral bump whose center channel moves linearly within the
// segment. Phone inventories share instantaneous spectra and differ in
// trajectory, so frame identity requires temporal context. Each "speaker"
// adds a fixed smooth channel offset, so speaker identity lives in the
// cross-channel profile.
struct SynthConfig {
  int n_speakers = 6;
  int n_phones = 5;
  int n_channels = 24;
  int n_utterances = 64;
  int min_len = 56;
  int max_len = 72;
  int min_segment = 8;
  int max_segment = 12;
  double noise_sigma = 0.05;
  uint64_t seed = 1234;
};

struct SynthCorpus {
  std::vector<FeatureMatrix> feats;
  std::vector<std::vector<int>> phone_labels;  // per utterance, per frame
  std::vector<int> speaker_labels;             // per utterance
};

SynthCorpus make_synth_corpus(const SynthConfig& cfg);

LabeledUtterances synth_labels(const SynthCorpus& c, ProbeTask task);

}  // namespace spt
