// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "spt/io.hpp"

namespace spt {

const char* feature_kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::kFbank: return "fbank";
    case FeatureKind::kMfcc: return "mfcc";
    case FeatureKind::kFmllr: return "fmllr";
    case FeatureKind::kOther: return "other";
  }
  return "?";
}

FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "fbank") return FeatureKind::kFbank;
  if (name == "mfcc") return FeatureKind::kMfcc;
  if (name == "fmllr") return FeatureKind::kFmllr;
  if (name == "other") return FeatureKind::kOther;
  throw ConfigError("unknown feature kind '" + name + "'");
}

int feature_kind_dim(FeatureKind k) {
  switch (k) {
    case FeatureKind::kFbank: return 80;
    case FeatureKind::kMfcc: return 39;
    case FeatureKind::kFmllr: return 40;
    case FeatureKind::kOther: return -1;
  }
  return -1;
}

void FeatureMatrix::validate() const {
  if (frames.ndim() != 2) throw DataError("utterance " + utterance_id + ": features must be 2-D");
  if (n_frames() < 1 || n_channels() < 1) {
    throw DataError("utterance " + utterance_id + ": empty feature matrix");
  }
  const int want = feature_kind_dim(kind);
  if (want > 0 && n_channels() != want) {
    throw DataError("utterance " + utterance_id + ": " + feature_kind_name(kind) + " features must have " +
                    std::to_string(want) + " channels, got " + std::to_string(n_channels()));
  }
  if (!frames.all_finite()) throw DataError("utterance " + utterance_id + ": non-finite feature value");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> mel_center_frequencies(int n_mels, double low_hz, double high_hz) {
  const double m_lo = hz_to_mel(low_hz), m_hi = hz_to_mel(high_hz);
  std::vector<double> centers(n_mels);
  for (int i = 1; i <= n_mels; ++i) {
    centers[i - 1] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));
  }
  return centers;
}

TensorD mel_filterbank(int n_mels, int n_fft, int sample_rate, double low_hz, double high_hz) {
  if (n_mels < 1) throw ConfigError("mel_filterbank: n_mels must be >= 1");
  const int n_bins = n_fft / 2 + 1;
  const double m_lo = hz_to_mel(low_hz), m_hi = hz_to_mel(high_hz);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * i / (n_mels + 1));
  }
  TensorD w = TensorD::zeros({n_mels, n_bins});
  for (int k = 0; k < n_bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / n_fft;
    for (int i = 0; i < n_mels; ++i) {
      const double lo = edges[i], c = edges[i + 1], hi = edges[i + 2];
      if (f > lo && f < c) {
        w.at(i, k) = (f - lo) / (c - lo);
      } else if (f >= c && f < hi) {
        w.at(i, k) = (hi - f) / (hi - c);
      }
    }
  }
  return w;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
  const size_t n = re.size();
  if (n == 0 || (n & (n - 1)) != 0 || im.size() != n) {
    throw ValidationError("fft_radix2: size must be a power of two");
  }
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t j = 0; j < len / 2; ++j) {
        const double ar = re[i + j], ai = im[i + j];
        const double br = re[i + j + len / 2] * cr - im[i + j + len / 2] * ci;
        const double bi = re[i + j + len / 2] * ci + im[i + j + len / 2] * cr;
        re[i + j] = ar + br;
        im[i + j] = ai + bi;
        re[i + j + len / 2] = ar - br;
        im[i + j + len / 2] = ai - bi;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

namespace {

// Log mel energies shared by fbank and mfcc.
TensorF log_mel_energies(const std::vector<int16_t>& waveform, int sample_rate, int n_mels) {
  if (sample_rate != kSampleRate) {
    throw DataError("unsupported sample rate " + std::to_string(sample_rate) + ", expected 16000");
  }
  const int64_t n = static_cast<int64_t>(waveform.size());
  const int n_frames = frame_count(n);
  if (n_frames < 1) {
    throw DataError("waveform too short: " + std::to_string(n) + " samples, need at least " +
                    std::to_string(kWinSamples));
  }

  std::vector<double> emph(waveform.size());
  for (size_t i = 0; i < waveform.size(); ++i) {
    const double cur = waveform[i] / 32768.0;
    const double prev = i == 0 ? cur : waveform[i - 1] / 32768.0;
    emph[i] = cur - kPreemphasis * prev;
  }

  std::vector<double> window(kWinSamples);
  for (int i = 0; i < kWinSamples; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * 3.14159265358979323846 * i / kWinSamples);
  }

  const TensorD fb = mel_filterbank(n_mels, kFftSize, kSampleRate, 0.0, kSampleRate / 2.0);
  const int n_bins = kFftSize / 2 + 1;

  TensorF out = TensorF::zeros({n_frames, n_mels});
  std::vector<double> re(kFftSize), im(kFftSize), power(n_bins);
  for (int t = 0; t < n_frames; ++t) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    const int64_t off = static_cast<int64_t>(t) * kHopSamples;
    for (int i = 0; i < kWinSamples; ++i) re[i] = emph[off + i] * window[i];
    fft_radix2(re, im);
    for (int k = 0; k < n_bins; ++k) power[k] = re[k] * re[k] + im[k] * im[k];
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (int k = 0; k < n_bins; ++k) e += fb.at(m, k) * power[k];
      out.at(t, m) = static_cast<float>(std::log(std::max(e, kLogFloor)));
    }
  }
  return out;
}

}  // namespace

FeatureMatrix fbank(const std::vector<int16_t>& waveform, int sample_rate, int n_mels) {
  FeatureMatrix f;
  f.frames = log_mel_energies(waveform, sample_rate, n_mels);
  f.kind = n_mels == 80 ? FeatureKind::kFbank : FeatureKind::kOther;
  f.frame_shift_ms = 10.0f;
  return f;
}

TensorF compute_deltas(const TensorF& x, int window) {
  require_2d(x, "compute_deltas");
  if (window < 1) throw ValidationError("compute_deltas: window must be >= 1");
  const int L = x.shape[0], H = x.shape[1];
  double denom = 0.0;
  for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
  TensorF d = TensorF::zeros({L, H});
  for (int t = 0; t < L; ++t) {
    for (int k = 1; k <= window; ++k) {
      const int lo = std::max(0, t - k), hi = std::min(L - 1, t + k);
      for (int j = 0; j < H; ++j) {
        d.at(t, j) += static_cast<float>(k * (x.at(hi, j) - x.at(lo, j)) / denom);
      }
    }
  }
  return d;
}

FeatureMatrix mfcc(const std::vector<int16_t>& waveform, int sample_rate) {
  const int n_mels = 23, n_ceps = 13;
  const TensorF logmel = log_mel_energies(waveform, sample_rate, n_mels);
  const int L = logmel.shape[0];

  // orthonormal DCT-II
  TensorF dct = TensorF::zeros({n_mels, n_ceps});
  for (int j = 0; j < n_ceps; ++j) {
    const double norm = j == 0 ? std::sqrt(1.0 / n_mels) : std::sqrt(2.0 / n_mels);
    for (int m = 0; m < n_mels; ++m) {
      dct.at(m, j) = static_cast<float>(norm * std::cos(3.14159265358979323846 * j * (m + 0.5) / n_mels));
    }
  }
  TensorF ceps = matmul(logmel, dct);
  TensorF d1 = compute_deltas(ceps, 2);
  TensorF d2 = compute_deltas(d1, 2);

  FeatureMatrix f;
  f.frames = TensorF::zeros({L, 3 * n_ceps});
  for (int t = 0; t < L; ++t) {
    for (int j = 0; j < n_ceps; ++j) {
      f.frames.at(t, j) = ceps.at(t, j);
      f.frames.at(t, n_ceps + j) = d1.at(t, j);
      f.frames.at(t, 2 * n_ceps + j) = d2.at(t, j);
    }
  }
  f.kind = FeatureKind::kMfcc;
  f.frame_shift_ms = 10.0f;
  return f;
}

void cmvn_per_speaker(std::vector<FeatureMatrix>& feats) {
  std::map<std::string, std::vector<FeatureMatrix*>> by_speaker;
  for (auto& f : feats) {
    f.validate();
    by_speaker[f.speaker_id].push_back(&f);
  }
  for (auto& [speaker, utts] : by_speaker) {
    const int H = utts.front()->n_channels();
    int64_t n = 0;
    for (const auto* f : utts) {
      if (f->n_channels() != H) {
        throw DataError("speaker " + speaker + ": mixed channel counts across utterances");
      }
      n += f->n_frames();
    }
    if (n < 2) throw DataError("speaker " + speaker + ": needs at least 2 frames for CMVN");
    std::vector<double> mean(H, 0.0), var(H, 0.0);
    for (const auto* f : utts) {
      for (int t = 0; t < f->n_frames(); ++t) {
        for (int j = 0; j < H; ++j) mean[j] += f->frames.at(t, j);
      }
    }
    for (int j = 0; j < H; ++j) mean[j] /= static_cast<double>(n);
    for (const auto* f : utts) {
      for (int t = 0; t < f->n_frames(); ++t) {
        for (int j = 0; j < H; ++j) {
          const double d = f->frames.at(t, j) - mean[j];
          var[j] += d * d;
        }
      }
    }
    for (int j = 0; j < H; ++j) var[j] /= static_cast<double>(n);
    for (auto* f : utts) {
      for (int t = 0; t < f->n_frames(); ++t) {
        for (int j = 0; j < H; ++j) {
          double v = f->frames.at(t, j) - mean[j];
          if (var[j] >= 1e-8) v /= std::sqrt(var[j]);
          f->frames.at(t, j) = static_cast<float>(v);
        }
      }
    }
  }
}

namespace {

uint32_t rd_u32le(const std::string& s, size_t off) {
  return static_cast<uint8_t>(s[off]) | static_cast<uint8_t>(s[off + 1]) << 8 |
         static_cast<uint8_t>(s[off + 2]) << 16 | static_cast<uint8_t>(s[off + 3]) << 24;
}
uint16_t rd_u16le(const std::string& s, size_t off) {
  return static_cast<uint16_t>(static_cast<uint8_t>(s[off]) | static_cast<uint8_t>(s[off + 1]) << 8);
}

}  // namespace

std::vector<int16_t> read_wav_mono16k(const std::string& path) {
  const std::string d = read_file(path);
  if (d.size() < 44 || d.compare(0, 4, "RIFF") != 0 || d.compare(8, 4, "WAVE") != 0) {
    throw DataError(path + ": not a RIFF/WAVE file");
  }
  size_t pos = 12;
  bool have_fmt = false;
  uint16_t channels = 0, bits = 0;
  uint32_t rate = 0;
  while (pos + 8 <= d.size()) {
    const std::string id = d.substr(pos, 4);
    const uint32_t sz = rd_u32le(d, pos + 4);
    pos += 8;
    if (pos + sz > d.size()) throw DataError(path + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (sz < 16) throw DataError(path + ": fmt chunk too small");
      const uint16_t tag = rd_u16le(d, pos);
      channels = rd_u16le(d, pos + 2);
      rate = rd_u32le(d, pos + 4);
      bits = rd_u16le(d, pos + 14);
      if (tag != 1) throw DataError(path + ": only PCM WAV is supported");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw DataError(path + ": data chunk before fmt chunk");
      if (channels != 1) throw DataError(path + ": expected mono, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw DataError(path + ": expected 16-bit samples, got " + std::to_string(bits));
      if (rate != kSampleRate) {
        throw DataError(path + ": unsupported sample rate " + std::to_string(rate) + ", expected 16000");
      }
      std::vector<int16_t> samples(sz / 2);
      std::memcpy(samples.data(), d.data() + pos, samples.size() * 2);
      return samples;
    }
    pos += sz + (sz & 1);
  }
  throw DataError(path + ": no data chunk found");
}

void write_wav_mono16k(const std::string& path, const std::vector<int16_t>& samples) {
  ByteWriter w;
  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  w.magic("RIFF");
  w.u32(36 + data_bytes);
  w.magic("WAVE");
  w.magic("fmt ");
  w.u32(16);
  w.u16(1);  // PCM
  w.u16(1);  // mono
  w.u32(kSampleRate);
  w.u32(kSampleRate * 2);  // byte rate
  w.u16(2);                // block align
  w.u16(16);               // bits
  w.magic("data");
  w.u32(data_bytes);
  w.bytes(samples.data(), data_bytes);
  write_file_atomic(path, w.str());
}

void write_tfea(const std::string& path, const FeatureMatrix& f) {
  f.validate();
  ByteWriter w;
  w.magic("TFEA1");
  w.u8(static_cast<uint8_t>(f.kind));
  w.u32(static_cast<uint32_t>(f.n_frames()));
  w.u32(static_cast<uint32_t>(f.n_channels()));
  w.f32(f.frame_shift_ms);
  w.str16(f.utterance_id);
  w.str16(f.speaker_id);
  w.bytes(f.frames.data.data(), f.frames.data.size() * 4);
  write_file_atomic(path, w.str());
}

FeatureMatrix read_tfea(const std::string& path) {
  const std::string data = read_file(path);
  ByteReader r(data, path);
  r.expect_magic("TFEA1", 5);
  const uint8_t kind = r.u8();
  if (kind > 3) throw DataError(path + ": unknown feature kind code " + std::to_string(kind));
  FeatureMatrix f;
  f.kind = static_cast<FeatureKind>(kind);
  const uint32_t L = r.u32();
  const uint32_t H = r.u32();
  if (L < 1 || H < 1) throw DataError(path + ": empty feature matrix");
  f.frame_shift_ms = r.f32();
  f.utterance_id = r.str16();
  f.speaker_id = r.str16();
  f.frames = TensorF::zeros({static_cast<int>(L), static_cast<int>(H)});
  r.bytes(f.frames.data.data(), f.frames.data.size() * 4);
  r.expect_exhausted();
  f.validate();
  return f;
}

Corpus load_manifest(const std::string& path, Split split) {
  const std::string data = read_file(path);
  std::istringstream lines(data);
  std::string line;
  if (!std::getline(lines, line)) throw DataError(path + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split_tsv = [](const std::string& s) {
    std::vector<std::string> cols;
    size_t start = 0;
    while (true) {
      const size_t tab = s.find('\t', start);
      if (tab == std::string::npos) {
        cols.push_back(s.substr(start));
        break;
      }
      cols.push_back(s.substr(start, tab - start));
      start = tab + 1;
    }
    return cols;
  };

  const std::vector<std::string> header = split_tsv(line);
  int c_utt = -1, c_spk = -1, c_path = -1, c_label = -1;
  for (size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "utterance_id") c_utt = static_cast<int>(i);
    else if (header[i] == "speaker_id") c_spk = static_cast<int>(i);
    else if (header[i] == "path") c_path = static_cast<int>(i);
    else if (header[i] == "label_path") c_label = static_cast<int>(i);
  }
  if (c_utt < 0 || c_spk < 0 || c_path < 0) {
    throw DataError(path + ": manifest header must name utterance_id, speaker_id and path columns");
  }

  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_relative()) fp = base / fp;
    return fp.string();
  };

  Corpus c;
  c.split = split;
  std::set<std::string> seen;
  int line_no = 1;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cols = split_tsv(line);
    if (static_cast<int>(cols.size()) <= std::max({c_utt, c_spk, c_path})) {
      throw DataError(path + ":" + std::to_string(line_no) + ": too few columns");
    }
    CorpusEntry e;
    e.utterance_id = cols[c_utt];
    e.speaker_id = cols[c_spk];
    e.path = resolve(cols[c_path]);
    if (c_label >= 0 && static_cast<int>(cols.size()) > c_label && !cols[c_label].empty()) {
      e.label_path = resolve(cols[c_label]);
    }
    if (e.utterance_id.empty()) throw DataError(path + ":" + std::to_string(line_no) + ": empty utterance_id");
    if (e.speaker_id.empty()) throw DataError(path + ":" + std::to_string(line_no) + ": empty speaker_id");
    if (!seen.insert(e.utterance_id).second) {
      throw DataError(path + ": duplicate utterance_id '" + e.utterance_id + "'");
    }
    if (!std::filesystem::exists(e.path)) {
      throw DataError(path + ": missing file " + e.path + " for utterance '" + e.utterance_id + "'");
    }
    if (!e.label_path.empty() && !std::filesystem::exists(e.label_path)) {
      throw DataError(path + ": missing label file " + e.label_path + " for utterance '" + e.utterance_id + "'");
    }
    c.entries.push_back(std::move(e));
  }
  if (c.entries.empty()) throw DataError(path + ": manifest has a header but no rows");
  return c;
}

std::vector<int> read_label_file(const std::string& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::vector<int> labels;
  long long v;
  while (in >> v) labels.push_back(static_cast<int>(v));
  if (!in.eof()) throw DataError(path + ": non-integer token in label file");
  if (labels.empty()) throw DataError(path + ": empty label file");
  return labels;
}

}  // namespace spt
