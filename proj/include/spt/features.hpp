// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spt/tensor.hpp"

namespace spt {

enum class FeatureKind : uint8_t { kFbank = 0, kMfcc = 1, kFmllr = 2, kOther = 3 };

const char* feature_kind_name(FeatureKind k);
FeatureKind feature_kind_from_name(const std::string& name);

// Declared channel count for a kind, or -1 when unconstrained.
int feature_kind_dim(FeatureKind k);

struct FeatureMatrix {
  std::string utterance_id;
  std::string speaker_id;
  TensorF frames;  // [L_x, H_x]
  FeatureKind kind = FeatureKind::kOther;
  float frame_shift_ms = 10.0f;

  int n_frames() const { return frames.shape.empty() ? 0 : frames.shape[0]; }
  int n_channels() const { return frames.ndim() == 2 ? frames.shape[1] : 0; }
  void validate() const;
};

enum class Split { kTrain, kDev, kTest };

struct CorpusEntry {
  std::string utterance_id;
  std::string speaker_id;
  std::string path;
  std::string label_path;  // optional
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  Split split = Split::kTrain;
};

// 16 kHz analysis frame geometry: 25 ms window, 10 ms shift.
inline constexpr int kSampleRate = 16000;
inline constexpr int kWinSamples = 400;
inline constexpr int kHopSamples = 160;
inline constexpr int kFftSize = 512;
inline constexpr double kPreemphasis = 0.97;
inline constexpr double kLogFloor = 1e-10;

inline int frame_count(int64_t n_samples) {
  if (n_samples < kWinSamples) return 0;
  return static_cast<int>((n_samples - kWinSamples) / kHopSamples) + 1;
}

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters over power-spectrum bins; returns [n_mels, n_bins] weights.
TensorD mel_filterbank(int n_mels, int n_fft, int sample_rate, double low_hz, double high_hz);
std::vector<double> mel_center_frequencies(int n_mels, double low_hz, double high_hz);

// In-place radix-2 FFT on interleaved complex data; n must be a power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

FeatureMatrix fbank(const std::vector<int16_t>& waveform, int sample_rate, int n_mels = 80);
FeatureMatrix mfcc(const std::vector<int16_t>& waveform, int sample_rate);

// Regression deltas, window +/-2, replicated edges.
TensorF compute_deltas(const TensorF& x, int window = 2);

// In-place per-speaker cepstral mean and variance normalization.
void cmvn_per_speaker(std::vector<FeatureMatrix>& feats);

std::vector<int16_t> read_wav_mono16k(const std::string& path);
void write_wav_mono16k(const std::string& path, const std::vector<int16_t>& samples);

void write_tfea(const std::string& path, const FeatureMatrix& f);
FeatureMatrix read_tfea(const std::string& path);

Corpus load_manifest(const std::string& path, Split split = Split::kTrain);

// One integer label per line (or whitespace-separated).
std::vector<int> read_label_file(const std::string& path);

}  // namespace spt
