// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <string>
#include <vector>

#include "spt/errors.hpp"
#include "spt/features.hpp"
#include "spt/io.hpp"
#include "spt/rng.hpp"

using namespace spt;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("spt_feat_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<int16_t> sine_wave(double hz, double seconds, double amplitude = 0.5) {
  const int n = static_cast<int>(seconds * kSampleRate);
  std::vector<int16_t> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = static_cast<int16_t>(amplitude * 32767.0 * std::sin(2.0 * kPi * hz * i / kSampleRate));
  }
  return w;
}

FeatureMatrix random_feature_matrix(uint64_t seed, int l, int h, FeatureKind kind = FeatureKind::kOther) {
  Rng r(seed);
  FeatureMatrix f;
  f.utterance_id = "utt_" + std::to_string(seed);
  f.speaker_id = "spk_" + std::to_string(seed % 3);
  f.kind = kind;
  f.frames = TensorF::zeros({l, h});
  for (auto& v : f.frames.data) v = static_cast<float>(r.next_gaussian());
  return f;
}

}  // namespace

TEST_CASE("frame_count formula") {
  CHECK(frame_count(16000) == 98);  // one second
  CHECK(frame_count(400) == 1);
  CHECK(frame_count(399) == 0);
  CHECK(frame_count(0) == 0);
  CHECK(frame_count(559) == 1);
  CHECK(frame_count(560) == 2);
  CHECK(frame_count(32000) == 198);
  for (int64_t n = 400; n < 4000; n += 37) {
    CHECK(frame_count(n) == (n - 400) / 160 + 1);
  }
}

TEST_CASE("fft matches a naive DFT") {
  Rng r(77);
  const size_t n = 16;
  std::vector<double> re(n), im(n);
  for (size_t i = 0; i < n; ++i) {
    re[i] = r.next_gaussian();
    im[i] = r.next_gaussian();
  }
  const std::vector<double> xr = re, xi = im;
  fft_radix2(re, im);
  for (size_t m = 0; m < n; ++m) {
    double sr = 0, si = 0;
    for (size_t k = 0; k < n; ++k) {
      const double ang = -2.0 * kPi * static_cast<double>(m * k) / static_cast<double>(n);
      sr += xr[k] * std::cos(ang) - xi[k] * std::sin(ang);
      si += xr[k] * std::sin(ang) + xi[k] * std::cos(ang);
    }
    CHECK(re[m] == doctest::Approx(sr).epsilon(1e-9));
    CHECK(im[m] == doctest::Approx(si).epsilon(1e-9));
  }

  // An impulse transforms to a flat spectrum.
  std::vector<double> ir(8, 0.0), ii(8, 0.0);
  ir[0] = 1.0;
  fft_radix2(ir, ii);
  for (size_t m = 0; m < 8; ++m) {
    CHECK(ir[m] == doctest::Approx(1.0));
    CHECK(ii[m] == doctest::Approx(0.0));
  }

  std::vector<double> odd(6, 0.0);
  CHECK_THROWS_AS(fft_radix2(odd, odd), ValidationError);
}

TEST_CASE("mel scale conversions") {
  CHECK(hz_to_mel(0.0) == doctest::Approx(0.0));
  CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  for (double hz : {10.0, 100.0, 440.0, 1000.0, 4000.0, 7999.0}) {
    CHECK(mel_to_hz(hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-10));
    CHECK(hz_to_mel(hz) > hz_to_mel(hz * 0.9));
  }
}

TEST_CASE("mel filterbank geometry") {
  const int n_mels = 40;
  const TensorD fb = mel_filterbank(n_mels, 512, 16000, 0.0, 8000.0);
  REQUIRE(fb.shape == std::vector<int>{n_mels, 257});
  for (double v : fb.data) CHECK(v >= 0.0);
  for (int m = 0; m < n_mels; ++m) {
    double mass = 0;
    for (int k = 0; k < 257; ++k) mass += fb.at(m, k);
    CHECK(mass > 0.0);
  }
  CHECK_THROWS_AS(mel_filterbank(0, 512, 16000, 0.0, 8000.0), ConfigError);

  // Center frequencies follow the closed-form warp.
  const std::vector<double> centers = mel_center_frequencies(n_mels, 0.0, 8000.0);
  const double m_hi = 2595.0 * std::log10(1.0 + 8000.0 / 700.0);
  for (int i = 0; i < n_mels; ++i) {
    const double want = 700.0 * (std::pow(10.0, (m_hi * (i + 1) / (n_mels + 1)) / 2595.0) - 1.0);
    CHECK(centers[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("fbank shape and silence floor") {
  const std::vector<int16_t> second(16000, 0);
  const FeatureMatrix f = fbank(second, 16000);
  CHECK(f.kind == FeatureKind::kFbank);
  REQUIRE(f.frames.shape == std::vector<int>{98, 80});
  // Silence hits the log floor everywhere.
  const float floor_val = static_cast<float>(std::log(1e-10));
  for (float v : f.frames.data) CHECK(v == floor_val);

  CHECK_THROWS_AS(fbank(std::vector<int16_t>(100, 0), 16000), DataError);
  CHECK_THROWS_AS(fbank(second, 8000), DataError);
}

TEST_CASE("1 kHz tone concentrates energy at the right mel channel") {
  const FeatureMatrix f = fbank(sine_wave(1000.0, 1.0), 16000);
  std::vector<double> profile(80, 0.0);
  for (int t = 0; t < f.n_frames(); ++t)
    for (int j = 0; j < 80; ++j) profile[j] += f.frames.at(t, j);
  int arg = 0;
  for (int j = 1; j < 80; ++j) {
    if (profile[j] > profile[arg]) arg = j;
  }
  const std::vector<double> centers = mel_center_frequencies(80, 0.0, 8000.0);
  // Adjacent filters near 1 kHz sit roughly 50 Hz apart.
  CHECK(std::abs(centers[arg] - 1000.0) < 80.0);
}

TEST_CASE("mfcc layout and internal delta consistency") {
  const FeatureMatrix f = mfcc(sine_wave(440.0, 1.0), 16000);
  CHECK(f.kind == FeatureKind::kMfcc);
  REQUIRE(f.frames.shape == std::vector<int>{98, 39});

  TensorF ceps = TensorF::zeros({98, 13});
  for (int t = 0; t < 98; ++t)
    for (int j = 0; j < 13; ++j) ceps.at(t, j) = f.frames.at(t, j);
  const TensorF d1 = compute_deltas(ceps, 2);
  const TensorF d2 = compute_deltas(d1, 2);
  for (int t = 0; t < 98; ++t) {
    for (int j = 0; j < 13; ++j) {
      CHECK(f.frames.at(t, 13 + j) == d1.at(t, j));
      CHECK(f.frames.at(t, 26 + j) == d2.at(t, j));
    }
  }
}

TEST_CASE("compute_deltas closed-form cases") {
  // Constant input has zero slope.
  const TensorF c = TensorF::full({10, 3}, 4.5f);
  for (float v : compute_deltas(c, 2).data) CHECK(v == 0.0f);

  // A linear ramp x(t) = a*t recovers slope a away from the edges and half
  // the slope at the replicated first frame.
  const float a = 0.75f;
  TensorF ramp = TensorF::zeros({12, 2});
  for (int t = 0; t < 12; ++t)
    for (int j = 0; j < 2; ++j) ramp.at(t, j) = a * static_cast<float>(t);
  const TensorF d = compute_deltas(ramp, 2);
  for (int t = 2; t < 10; ++t)
    for (int j = 0; j < 2; ++j) CHECK(d.at(t, j) == doctest::Approx(a).epsilon(1e-6));
  // t = 0: (1*(x1-x0) + 2*(x2-x0)) / 10 = (a + 4a) / 10
  CHECK(d.at(0, 0) == doctest::Approx(0.5f * a).epsilon(1e-6));

  CHECK_THROWS_AS(compute_deltas(ramp, 0), ValidationError);
}

TEST_CASE("cmvn post-conditions, idempotence and degeneracy") {
  std::vector<FeatureMatrix> feats;
  feats.push_back(random_feature_matrix(1, 50, 6));
  feats.push_back(random_feature_matrix(2, 30, 6));
  feats.push_back(random_feature_matrix(3, 40, 6));
  feats[0].speaker_id = feats[1].speaker_id = "A";
  feats[2].speaker_id = "B";
  // Speaker-specific offsets that normalization must remove.
  for (auto& v : feats[0].frames.data) v += 5.0f;
  for (auto& v : feats[1].frames.data) v += 5.0f;
  for (auto& v : feats[2].frames.data) v -= 3.0f;

  cmvn_per_speaker(feats);

  auto stats = [](const std::vector<const FeatureMatrix*>& utts, int j) {
    double mean = 0, var = 0;
    int64_t n = 0;
    for (const auto* f : utts)
      for (int t = 0; t < f->n_frames(); ++t) {
        mean += f->frames.at(t, j);
        ++n;
      }
    mean /= static_cast<double>(n);
    for (const auto* f : utts)
      for (int t = 0; t < f->n_frames(); ++t) {
        const double d = f->frames.at(t, j) - mean;
        var += d * d;
      }
    return std::pair<double, double>(mean, var / static_cast<double>(n));
  };

  for (int j = 0; j < 6; ++j) {
    auto [ma, va] = stats({&feats[0], &feats[1]}, j);
    CHECK(std::abs(ma) < 1e-5);
    CHECK(va == doctest::Approx(1.0).epsilon(1e-4));
    auto [mb, vb] = stats({&feats[2]}, j);
    CHECK(std::abs(mb) < 1e-5);
    CHECK(vb == doctest::Approx(1.0).epsilon(1e-4));
  }

  // Normalizing again moves nothing measurably.
  std::vector<FeatureMatrix> again = feats;
  cmvn_per_speaker(again);
  for (size_t i = 0; i < feats.size(); ++i) {
    for (size_t k = 0; k < feats[i].frames.data.size(); ++k) {
      CHECK(again[i].frames.data[k] == doctest::Approx(feats[i].frames.data[k]).epsilon(1e-5));
    }
  }

  // A constant channel centers to zero and is left unscaled.
  std::vector<FeatureMatrix> flat;
  flat.push_back(random_feature_matrix(9, 20, 3));
  for (int t = 0; t < 20; ++t) flat[0].frames.at(t, 1) = 2.5f;
  cmvn_per_speaker(flat);
  for (int t = 0; t < 20; ++t) CHECK(flat[0].frames.at(t, 1) == 0.0f);

  // Too few frames for a variance estimate.
  std::vector<FeatureMatrix> tiny;
  tiny.push_back(random_feature_matrix(4, 1, 3));
  CHECK_THROWS_AS(cmvn_per_speaker(tiny), DataError);

  // Channel counts must agree within a speaker.
  std::vector<FeatureMatrix> mixed;
  mixed.push_back(random_feature_matrix(5, 10, 3));
  mixed.push_back(random_feature_matrix(6, 10, 4));
  mixed[0].speaker_id = mixed[1].speaker_id = "C";
  CHECK_THROWS_AS(cmvn_per_speaker(mixed), DataError);
}

TEST_CASE("feature kind names and dims") {
  CHECK(feature_kind_from_name("fbank") == FeatureKind::kFbank);
  CHECK(feature_kind_from_name("mfcc") == FeatureKind::kMfcc);
  CHECK(feature_kind_from_name("fmllr") == FeatureKind::kFmllr);
  CHECK(feature_kind_from_name("other") == FeatureKind::kOther);
  CHECK_THROWS_AS(feature_kind_from_name("plp"), ConfigError);
  CHECK(std::string(feature_kind_name(FeatureKind::kFbank)) == "fbank");
  CHECK(feature_kind_dim(FeatureKind::kFbank) == 80);
  CHECK(feature_kind_dim(FeatureKind::kMfcc) == 39);
  CHECK(feature_kind_dim(FeatureKind::kFmllr) == 40);
  CHECK(feature_kind_dim(FeatureKind::kOther) == -1);
}

TEST_CASE("tfea round-trip is byte identical") {
  TempDir tmp;
  const FeatureMatrix f = random_feature_matrix(11, 37, 24);
  const std::string p1 = tmp.file("a.tfea");
  write_tfea(p1, f);
  const FeatureMatrix g = read_tfea(p1);
  CHECK(g.utterance_id == f.utterance_id);
  CHECK(g.speaker_id == f.speaker_id);
  CHECK(g.kind == f.kind);
  CHECK(g.frame_shift_ms == f.frame_shift_ms);
  REQUIRE(g.frames.shape == f.frames.shape);
  CHECK(g.frames.data == f.frames.data);

  // Writing the parsed copy reproduces the file byte for byte.
  const std::string p2 = tmp.file("b.tfea");
  write_tfea(p2, g);
  CHECK(read_file(p1) == read_file(p2));
}

TEST_CASE("tfea rejects malformed files") {
  TempDir tmp;
  const FeatureMatrix f = random_feature_matrix(13, 10, 8);
  const std::string good = tmp.file("good.tfea");
  write_tfea(good, f);
  const std::string bytes = read_file(good);

  const std::string trunc = tmp.file("trunc.tfea");
  write_file_atomic(trunc, bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(read_tfea(trunc), DataError);

  const std::string extra = tmp.file("extra.tfea");
  write_file_atomic(extra, bytes + "xx");
  CHECK_THROWS_AS(read_tfea(extra), DataError);

  const std::string magic = tmp.file("magic.tfea");
  std::string bad = bytes;
  bad[0] = 'X';
  write_file_atomic(magic, bad);
  CHECK_THROWS_AS(read_tfea(magic), DataError);

  // Unknown kind code.
  std::string badkind = bytes;
  badkind[5] = 7;
  const std::string pk = tmp.file("kind.tfea");
  write_file_atomic(pk, badkind);
  CHECK_THROWS_AS(read_tfea(pk), DataError);

  // A declared kind with the wrong channel count fails validation on both
  // ends.
  FeatureMatrix wrong = random_feature_matrix(14, 10, 24, FeatureKind::kMfcc);
  CHECK_THROWS_AS(write_tfea(tmp.file("w.tfea"), wrong), DataError);
  std::string relabeled = bytes;
  relabeled[5] = 1;  // claim mfcc over 8 channels
  const std::string pr = tmp.file("relabel.tfea");
  write_file_atomic(pr, relabeled);
  CHECK_THROWS_AS(read_tfea(pr), DataError);

  CHECK_THROWS_AS(read_tfea(tmp.file("missing.tfea")), IoError);
}

TEST_CASE("wav round-trip and format rejection") {
  TempDir tmp;
  Rng r(3);
  std::vector<int16_t> samples(5000);
  for (auto& s : samples) s = static_cast<int16_t>(static_cast<int64_t>(r.next_u64()));
  const std::string p = tmp.file("a.wav");
  write_wav_mono16k(p, samples);
  CHECK(read_wav_mono16k(p) == samples);

  const std::string bytes = read_file(p);

  // Stereo is rejected.
  std::string stereo = bytes;
  stereo[22] = 2;
  write_file_atomic(tmp.file("st.wav"), stereo);
  CHECK_THROWS_AS(read_wav_mono16k(tmp.file("st.wav")), DataError);

  // Wrong rate is rejected. The rate field sits at offset 24.
  std::string slow = bytes;
  slow[24] = 0x40;
  slow[25] = 0x1f;  // 8000
  write_file_atomic(tmp.file("slow.wav"), slow);
  CHECK_THROWS_AS(read_wav_mono16k(tmp.file("slow.wav")), DataError);

  write_file_atomic(tmp.file("junk.wav"), "not audio at all");
  CHECK_THROWS_AS(read_wav_mono16k(tmp.file("junk.wav")), DataError);
}

TEST_CASE("manifest parsing and validation") {
  TempDir tmp;
  const FeatureMatrix f1 = random_feature_matrix(21, 10, 8);
  const FeatureMatrix f2 = random_feature_matrix(22, 12, 8);
  write_tfea(tmp.file("u1.tfea"), f1);
  write_tfea(tmp.file("u2.tfea"), f2);
  write_file_atomic(tmp.file("u1.lab"), "0 1 2 1 0 2 2 1 0 1\n");

  const std::string man = tmp.file("manifest.tsv");
  write_file_atomic(man,
                    "utterance_id\tspeaker_id\tpath\tlabel_path\n"
                    "u1\ts1\tu1.tfea\tu1.lab\n"
                    "u2\ts2\tu2.tfea\t\n");
  const Corpus c = load_manifest(man, Split::kTrain);
  REQUIRE(c.entries.size() == 2);
  CHECK(c.entries[0].utterance_id == "u1");
  CHECK(c.entries[0].label_path == tmp.file("u1.lab"));
  CHECK(c.entries[1].label_path.empty());
  // Relative paths resolve against the manifest directory.
  CHECK(c.entries[0].path == tmp.file("u1.tfea"));

  CHECK(read_label_file(tmp.file("u1.lab")) == std::vector<int>{0, 1, 2, 1, 0, 2, 2, 1, 0, 1});

  write_file_atomic(tmp.file("bad_header.tsv"), "utterance_id\tpath\nu1\tu1.tfea\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("bad_header.tsv")), DataError);

  write_file_atomic(tmp.file("dup.tsv"),
                    "utterance_id\tspeaker_id\tpath\nu1\ts1\tu1.tfea\nu1\ts1\tu2.tfea\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("dup.tsv")), DataError);

  write_file_atomic(tmp.file("missing.tsv"), "utterance_id\tspeaker_id\tpath\nu9\ts1\tu9.tfea\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("missing.tsv")), DataError);

  write_file_atomic(tmp.file("short_row.tsv"), "utterance_id\tspeaker_id\tpath\nu1\ts1\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("short_row.tsv")), DataError);

  write_file_atomic(tmp.file("only_header.tsv"), "utterance_id\tspeaker_id\tpath\n");
  CHECK_THROWS_AS(load_manifest(tmp.file("only_header.tsv")), DataError);

  write_file_atomic(tmp.file("empty.tsv"), "");
  CHECK_THROWS_AS(load_manifest(tmp.file("empty.tsv")), DataError);

  write_file_atomic(tmp.file("badlab.lab"), "1 2 x\n");
  CHECK_THROWS_AS(read_label_file(tmp.file("badlab.lab")), DataError);
  write_file_atomic(tmp.file("emptylab.lab"), "");
  CHECK_THROWS_AS(read_label_file(tmp.file("emptylab.lab")), DataError);
}
