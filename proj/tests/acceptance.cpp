// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0
//
// End-to-end acceptance checks. Each numbered check prints one [PASS]/[FAIL]
// line; the binary exits 0 only when every check passes. Expected values are
// computed independently here (integer arithmetic, closed forms, external
// std::mt19937_64 draws) rather than taken from the library under test.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "spt/alteration.hpp"
#include "spt/encoder.hpp"
#include "spt/features.hpp"
#include "spt/graph.hpp"
#include "spt/io.hpp"
#include "spt/pretrain.hpp"
#include "spt/probes.hpp"
#include "spt/rng.hpp"
#include "spt/synth.hpp"

using namespace spt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

fs::path scratch_dir() {
  static const fs::path p =
      fs::temp_directory_path() / ("spt_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// 1. Block-count formula: T_num = nearest-integer(p_t * l / w_t), exhaustive.

Outcome c1_block_count() {
  struct Frac {
    long long num, den;
    double value;
  };
  const Frac fracs[] = {{0, 1, 0.0}, {1, 20, 0.05}, {3, 20, 0.15}, {1, 2, 0.5}};
  long long combos = 0;
  for (int w : {1, 7}) {
    for (const Frac& f : fracs) {
      for (int l = 7; l <= 2000; ++l) {
        // floor((p*l/w) + 1/2) in exact integer arithmetic; all values are
        // nonnegative so this is the half-away-from-zero rounding.
        const long long want = (2 * f.num * l + f.den * w) / (2 * f.den * w);
        const int got = time_alteration_count(f.value, l, w);
        if (got != want) {
          return {false, fmt("p=%g l=%d w=%d: got %d, expected %lld", f.value, l, w, got, want)};
        }
        if (w == 1 && got != std::llround(f.value * l)) {
          return {false, fmt("w=1 special case broken at p=%g l=%d", f.value, l)};
        }
        ++combos;
      }
    }
  }
  return {true, fmt("%lld combinations exact, w=1 collapses to round(p*l)", combos)};
}

// ---------------------------------------------------------------------------
// 2. Alteration statistics over 100k seeded draws per stage.

Outcome c2_alteration_statistics() {
  const int64_t draws = 100000;
  const AlterationConfig cfg;
  Rng fill(101);
  TensorF x = TensorF::zeros({56, 24});
  for (auto& v : x.data) v = static_cast<float>(fill.next_gaussian());

  int64_t mode_counts[3] = {0, 0, 0};
  int64_t n_blocks = 0, ch_zero = 0, noise_on = 0, noise_n = 0;
  double noise_sum = 0.0, noise_sq = 0.0;
  Rng rng(102);
  for (int64_t i = 0; i < draws; ++i) {
    AlterationRecord rt;
    time_alteration(x, cfg, rng, rt);
    for (const TimeBlock& b : rt.time_blocks) {
      ++n_blocks;
      ++mode_counts[static_cast<int>(b.mode)];
    }
    AlterationRecord rc;
    channel_alteration(x, cfg, rng, rc);
    ch_zero += rc.channel_block.has_value() ? 0 : 1;
    AlterationRecord rm;
    magnitude_alteration(x, cfg, rng, rm);
    if (rm.noise_applied) {
      ++noise_on;
      for (float v : rm.noise.data) {
        noise_sum += v;
        noise_sq += static_cast<double>(v) * v;
        ++noise_n;
      }
    }
  }

  auto freq_ok = [](double got, double expect, int64_t n) {
    return std::abs(got - expect) <= 3.0 * std::sqrt(expect * (1.0 - expect) / static_cast<double>(n));
  };
  const double f_zero = static_cast<double>(mode_counts[0]) / static_cast<double>(n_blocks);
  const double f_repl = static_cast<double>(mode_counts[1]) / static_cast<double>(n_blocks);
  const double f_keep = static_cast<double>(mode_counts[2]) / static_cast<double>(n_blocks);
  if (!freq_ok(f_zero, 0.8, n_blocks) || !freq_ok(f_repl, 0.1, n_blocks) ||
      !freq_ok(f_keep, 0.1, n_blocks)) {
    return {false, fmt("time modes %.4f/%.4f/%.4f stray from 0.8/0.1/0.1", f_zero, f_repl, f_keep)};
  }
  const double f_ch = static_cast<double>(ch_zero) / static_cast<double>(draws);
  if (!freq_ok(f_ch, 1.0 / 9.0, draws)) {
    return {false, fmt("channel no-mask frequency %.5f strays from 1/9", f_ch)};
  }
  const double f_noise = static_cast<double>(noise_on) / static_cast<double>(draws);
  if (!freq_ok(f_noise, cfg.p_n, draws)) {
    return {false, fmt("noise frequency %.5f strays from %.2f", f_noise, cfg.p_n)};
  }
  const double mean = noise_sum / static_cast<double>(noise_n);
  const double var = noise_sq / static_cast<double>(noise_n) - mean * mean;
  const double var_tol = 3.0 * cfg.noise_variance * std::sqrt(2.0 / static_cast<double>(noise_n - 1));
  if (std::abs(var - cfg.noise_variance) > var_tol) {
    return {false, fmt("noise variance %.5f strays from %.2f (tol %.5f)", var, cfg.noise_variance, var_tol)};
  }
  return {true, fmt("modes %.3f/%.3f/%.3f, no-mask %.4f, noise freq %.4f, noise var %.4f", f_zero,
                    f_repl, f_keep, f_ch, f_noise, var)};
}

// ---------------------------------------------------------------------------
// 3. Gradient fidelity: central differences in double vs the reverse sweep.

Outcome c3_gradient_fidelity() {
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.input_dim = 6;
  cfg.dropout = 0.0;
  const int l_pad = 6, l_real = 5;

  auto [enc, head] = init_params(cfg, 4242);
  std::vector<TensorD> params;
  for (const TensorF* p : flat_params(enc, &head)) params.push_back(p->cast<double>());
  const std::vector<std::string> names = param_names(cfg, true);

  Rng rng(4243);
  TensorD x = TensorD::zeros({l_pad, cfg.input_dim});
  TensorD target = TensorD::zeros({l_pad, cfg.input_dim});
  TensorD mask = TensorD::zeros({l_pad, cfg.input_dim});
  std::vector<uint8_t> pad(l_pad, 1);
  pad[l_pad - 1] = 0;
  for (int t = 0; t < l_real; ++t) {
    for (int j = 0; j < cfg.input_dim; ++j) {
      x.at(t, j) = rng.next_gaussian();
      target.at(t, j) = rng.next_gaussian();
      mask.at(t, j) = rng.next_double() < 0.5 ? 1.0 : 0.0;
    }
  }
  mask.at(0, 0) = 1.0;
  int64_t count = 0;
  for (double v : mask.data) count += v != 0.0 ? 1 : 0;

  auto loss_of = [&](const std::vector<TensorD>& ps, std::vector<TensorD>* grads) {
    GraphD g;
    std::vector<int> ids;
    for (size_t i = 0; i < ps.size(); ++i) ids.push_back(g.leaf(ps[i], names[i], true));
    auto fwd = build_forward_with<double>(g, cfg, ids, x, pad, false, nullptr, true);
    const int loss =
        g.scale(g.abs_sum_masked(fwd.recon_node, target, mask), 1.0 / static_cast<double>(count));
    if (grads != nullptr) {
      g.backward(loss);
      grads->clear();
      for (int id : ids) grads->push_back(g.grad(id));
    }
    return g.value(loss).data[0];
  };

  std::vector<TensorD> analytic;
  loss_of(params, &analytic);

  // Random unit directions drawn outside the library's RNG.
  std::mt19937_64 gen(777);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double eps = 1e-6;
  const int n_dirs = 100;
  double max_rel = 0.0;
  for (int k = 0; k < n_dirs; ++k) {
    std::vector<TensorD> dir;
    double norm = 0.0;
    for (const auto& p : params) {
      TensorD d = TensorD::zeros(p.shape);
      for (auto& v : d.data) {
        v = normal(gen);
        norm += v * v;
      }
      dir.push_back(std::move(d));
    }
    norm = std::sqrt(norm);
    std::vector<TensorD> plus = params, minus = params;
    double dot = 0.0;
    for (size_t i = 0; i < params.size(); ++i) {
      for (size_t c = 0; c < params[i].data.size(); ++c) {
        const double d = dir[i].data[c] / norm;
        plus[i].data[c] += eps * d;
        minus[i].data[c] -= eps * d;
        dot += analytic[i].data[c] * d;
      }
    }
    const double fd = (loss_of(plus, nullptr) - loss_of(minus, nullptr)) / (2.0 * eps);
    max_rel = std::max(max_rel, std::abs(fd - dot) / std::max({std::abs(dot), std::abs(fd), 1e-8}));
  }
  if (!(max_rel < 1e-5)) {
    return {false, fmt("max relative error %.3e over %d directions", max_rel, n_dirs)};
  }
  return {true, fmt("max relative error %.3e over %d directions", max_rel, n_dirs)};
}

// ---------------------------------------------------------------------------
// 4. Schedule exactness and piecewise linearity.

Outcome c4_schedule() {
  for (int64_t t_steps : {int64_t{1000}, int64_t{2000}, int64_t{300000}}) {
    const double warm_end = 0.07 * static_cast<double>(t_steps);
    if (lr_at_step(warm_end, t_steps, 2e-4, 0.07) != 2e-4) {
      return {false, fmt("peak at warmup end is not exactly 2e-4 for T=%lld",
                         static_cast<long long>(t_steps))};
    }
    if (lr_at_step(0.0, t_steps, 2e-4, 0.07) != 0.0 ||
        lr_at_step(static_cast<double>(t_steps), t_steps, 2e-4, 0.07) != 0.0) {
      return {false, "endpoints are not exactly zero"};
    }
  }

  const int64_t T = 1000;
  const double peak = 2e-4, wf = 0.07, warm_end = wf * static_cast<double>(T);
  std::mt19937_64 gen(31337);
  std::uniform_real_distribution<double> uni(0.0, static_cast<double>(T));
  for (int i = 0; i < 1000; ++i) {
    const double s = uni(gen);
    const double lr = lr_at_step(s, T, peak, wf);
    const double want = s <= warm_end
                            ? peak * (s / warm_end)
                            : peak * ((static_cast<double>(T) - s) / (static_cast<double>(T) - warm_end));
    if (std::abs(lr - want) > 1e-15 * peak) {
      return {false, fmt("closed form mismatch at step %.6f: %.17g vs %.17g", s, lr, want)};
    }
    // Collinearity with the containing segment's endpoints.
    const double a = s <= warm_end ? 0.0 : warm_end;
    const double b = s <= warm_end ? warm_end : static_cast<double>(T);
    const double la = lr_at_step(a, T, peak, wf), lb = lr_at_step(b, T, peak, wf);
    const double interp = la + (lb - la) * ((s - a) / (b - a));
    if (std::abs(lr - interp) > 1e-12 * peak) {
      return {false, fmt("segment through (%g, %g) is not linear at step %.6f", a, b, s)};
    }
  }
  return {true, "peak exact, endpoints zero, 1000 random points collinear"};
}

// ---------------------------------------------------------------------------
// 5. Parameter counts of the named presets.

Outcome c5_parameter_counts() {
  const ModelConfig base = model_preset("base", 80);
  const int64_t D = 768, F = 3072;
  const int64_t layer_want = 4 * (D * D + D) + (D * F + F) + (F * D + D) + 4 * D;
  const int64_t layer = encoder_layer_param_count(base);
  if (layer != layer_want) {
    return {false, fmt("per-layer count %lld, expected %lld", static_cast<long long>(layer),
                       static_cast<long long>(layer_want))};
  }
  const int64_t base_total = static_cast<int64_t>(base.n_layers) * layer;
  if (base.n_layers != 3 || base_total != 21263616LL) {
    return {false, fmt("base layer total %lld, expected 21263616", static_cast<long long>(base_total))};
  }

  const struct {
    const char* name;
    int n_layers;
    double headline;
  } bigger[] = {{"medium", 6, 42.6e6}, {"large", 12, 85.1e6}, {"xlarge", 24, 170.1e6}};
  for (const auto& b : bigger) {
    const ModelConfig cfg = model_preset(b.name, 80);
    if (cfg.n_layers != b.n_layers || encoder_layer_param_count(cfg) != layer) {
      return {false, fmt("%s preset does not share the base layer geometry", b.name)};
    }
    const double total = static_cast<double>(cfg.n_layers) * static_cast<double>(layer);
    if (std::abs(total - b.headline) / b.headline > 0.01) {
      return {false, fmt("%s layer total %.0f strays from %.1fM by more than 1%%", b.name, total,
                         b.headline / 1e6)};
    }
  }
  return {true, "base 21,263,616; medium/large/xlarge within 1% of 42.6M/85.1M/170.1M"};
}

// ---------------------------------------------------------------------------
// 6. Learning beats the per-channel-mean baseline on masked cells.

double masked_l1_ratio(const std::vector<FeatureMatrix>& corpus, const TrainConfig& cfg,
                       const TrainState& st, const std::vector<double>& chan_mean, uint64_t eval_seed) {
  Rng erng(eval_seed);
  double model_abs = 0.0, base_abs = 0.0;
  int64_t cells = 0;
  for (const FeatureMatrix& f : corpus) {
    auto [altered, rec] = alter(f.frames, cfg.alteration, erng);
    const std::vector<uint8_t> pad(f.n_frames(), 1);
    const std::vector<TensorF> layers = encode(altered, st.enc, cfg.model, pad);
    const TensorF recon = reconstruct(layers.back(), st.head, cfg.model);
    for (int t = 0; t < f.n_frames(); ++t) {
      for (int j = 0; j < f.n_channels(); ++j) {
        const bool masked = (!rec.altered_frame_flags.empty() && rec.altered_frame_flags[t]) ||
                            (!rec.altered_channel_flags.empty() && rec.altered_channel_flags[j]);
        if (!masked) continue;
        const double truth = f.frames.at(t, j);
        model_abs += std::abs(recon.at(t, j) - truth);
        base_abs += std::abs(chan_mean[j] - truth);
        ++cells;
      }
    }
  }
  return (model_abs / static_cast<double>(cells)) / (base_abs / static_cast<double>(cells));
}

TrainState pretrain_corpus(const std::vector<FeatureMatrix>& corpus, TrainConfig cfg) {
  TrainState st = init_train_state(cfg);
  const int n = static_cast<int>(corpus.size());
  for (int64_t step = 0; step < cfg.t_steps; ++step) {
    const std::vector<int> idx = batch_indices(cfg.seed, n, step, cfg.batch_size);
    std::vector<const FeatureMatrix*> batch;
    batch.reserve(idx.size());
    for (int i : idx) batch.push_back(&corpus[i]);
    train_step(st, batch, cfg);
  }
  return st;
}

Outcome c6_learning_works() {
  const SynthConfig sc;  // the bundled corpus: 64 utterances, 24 channels
  const SynthCorpus corpus = make_synth_corpus(sc);

  std::vector<double> chan_mean(sc.n_channels, 0.0);
  int64_t frames = 0;
  for (const FeatureMatrix& f : corpus.feats) {
    for (int t = 0; t < f.n_frames(); ++t) {
      for (int j = 0; j < f.n_channels(); ++j) chan_mean[j] += f.frames.at(t, j);
    }
    frames += f.n_frames();
  }
  for (auto& v : chan_mean) v /= static_cast<double>(frames);

  std::vector<double> ratios;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;
    cfg.model = model_preset("micro", sc.n_channels);
    cfg.t_steps = 2000;
    cfg.batch_size = 12;
    cfg.peak_lr = 2e-3;
    cfg.seed = seed;
    const TrainState st = pretrain_corpus(corpus.feats, cfg);
    ratios.push_back(masked_l1_ratio(corpus.feats, cfg, st, chan_mean, mix_seed(0xacce97, seed)));
  }
  const double med = median5(ratios);
  return {med < 0.5, fmt("median masked-cell L1 ratio vs channel-mean baseline %.4f (want < 0.5)", med)};
}

// ---------------------------------------------------------------------------
// 7. Representation quality orderings across alteration objectives.

struct ProbePair {
  double phone = 0.0;
  double speaker = 0.0;
};

void stratified_split(const std::vector<int>& strata, const LabeledUtterances& all,
                      LabeledUtterances* train, LabeledUtterances* test) {
  std::map<int, int> seen;
  for (size_t u = 0; u < all.reprs.size(); ++u) {
    const int k = seen[strata[u]]++;
    LabeledUtterances* dst = k % 4 == 3 ? test : train;
    dst->reprs.push_back(all.reprs[u]);
    if (u < all.frame_labels.size()) dst->frame_labels.push_back(all.frame_labels[u]);
    if (u < all.utt_labels.size()) dst->utt_labels.push_back(all.utt_labels[u]);
  }
}

// Test accuracy on both probes, averaged over three probe-training seeds to
// damp classifier-fit noise. The frame probe gets a hidden layer; direction
// information is not linearly separable per frame.
ProbePair probe_encoder(const EncoderParams& enc, const ModelConfig& mcfg,
                        const SynthCorpus& probe_corpus, uint64_t seed) {
  ProbePair out;
  std::vector<TensorF> reprs;
  reprs.reserve(probe_corpus.feats.size());
  for (const FeatureMatrix& f : probe_corpus.feats) {
    const std::vector<uint8_t> pad(f.n_frames(), 1);
    reprs.push_back(encode(f.frames, enc, mcfg, pad).back());
  }

  for (ProbeTask task : {ProbeTask::kPhoneFrame, ProbeTask::kSpeakerUtterance}) {
    LabeledUtterances all = synth_labels(probe_corpus, task);
    all.reprs = reprs;
    LabeledUtterances train, test;
    stratified_split(probe_corpus.speaker_labels, all, &train, &test);
    ProbeSpec spec;
    spec.task = task;
    const bool frame = task == ProbeTask::kPhoneFrame;
    spec.classifier = frame ? ProbeClassifier::kHidden1 : ProbeClassifier::kLinear;
    spec.n_classes = frame ? 5 : 6;
    spec.epochs = frame ? 16 : 32;
    double acc = 0.0;
    for (uint64_t ps : {seed, seed + 100, seed + 200}) {
      acc += train_probe(train, test, spec, ps).test_accuracy / 3.0;
    }
    (frame ? out.phone : out.speaker) = acc;
  }
  return out;
}

Outcome c7_representation_ordering() {
  SynthConfig train_sc;  // pre-training data
  SynthConfig probe_sc;  // held-out probe data
  probe_sc.seed = 777;
  probe_sc.n_utterances = 96;
  const SynthCorpus train_corpus = make_synth_corpus(train_sc);
  const SynthCorpus probe_corpus = make_synth_corpus(probe_sc);

  auto objective = [](bool time, bool channel, bool magnitude) {
    AlterationConfig a;
    a.enable_time = time;
    a.enable_channel = channel;
    a.enable_magnitude = magnitude;
    return a;
  };

  std::vector<double> full_phone, full_speaker, rand_phone, rand_speaker;
  std::vector<double> time_phone, time_speaker, chan_phone, chan_speaker;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    TrainConfig cfg;
    cfg.model = model_preset("micro", train_sc.n_channels);
    // With light dropout the encoder can pass frames through unchanged and
    // the objectives become indistinguishable on clean inputs; 0.3 forces
    // contextual redundancy, so each objective's priorities show up in the
    // representations.
    cfg.model.dropout = 0.3;
    cfg.t_steps = 2000;
    cfg.batch_size = 12;
    cfg.peak_lr = 2e-3;
    cfg.seed = seed;

    cfg.alteration = objective(true, true, true);
    const TrainState m_full = pretrain_corpus(train_corpus.feats, cfg);
    cfg.alteration = objective(true, false, false);
    const TrainState m_time = pretrain_corpus(train_corpus.feats, cfg);
    cfg.alteration = objective(false, true, false);
    const TrainState m_chan = pretrain_corpus(train_corpus.feats, cfg);
    const TrainState m_rand = init_train_state(cfg);

    const ProbePair p_full = probe_encoder(m_full.enc, cfg.model, probe_corpus, seed);
    const ProbePair p_time = probe_encoder(m_time.enc, cfg.model, probe_corpus, seed);
    const ProbePair p_chan = probe_encoder(m_chan.enc, cfg.model, probe_corpus, seed);
    const ProbePair p_rand = probe_encoder(m_rand.enc, cfg.model, probe_corpus, seed);
    full_phone.push_back(p_full.phone);
    full_speaker.push_back(p_full.speaker);
    time_phone.push_back(p_time.phone);
    time_speaker.push_back(p_time.speaker);
    chan_phone.push_back(p_chan.phone);
    chan_speaker.push_back(p_chan.speaker);
    rand_phone.push_back(p_rand.phone);
    rand_speaker.push_back(p_rand.speaker);
  }

  const double fp = median5(full_phone), fs = median5(full_speaker);
  const double rp = median5(rand_phone), rs = median5(rand_speaker);
  const double tp = median5(time_phone), ts = median5(time_speaker);
  const double cp = median5(chan_phone), cs = median5(chan_speaker);
  const std::string detail =
      fmt("phone: full %.3f rand %.3f time %.3f chan %.3f | speaker: full %.3f rand %.3f time %.3f "
          "chan %.3f",
          fp, rp, tp, cp, fs, rs, ts, cs);
  if (!(fp > rp)) return {false, "trained not above random init on the phone probe; " + detail};
  if (!(fs > rs)) return {false, "trained not above random init on the speaker probe; " + detail};
  if (!(tp >= cp)) return {false, "time objective below channel-only on the phone probe; " + detail};
  if (!(cs >= ts)) return {false, "channel objective below time-only on the speaker probe; " + detail};
  return {true, detail};
}

// ---------------------------------------------------------------------------
// 8. Chance level on label-shuffled data, including 251 classes.

Outcome c8_chance_level() {
  // Shuffled speaker labels on the synthetic corpus.
  SynthConfig sc;
  sc.seed = 31337;
  sc.n_utterances = 96;
  const SynthCorpus corpus = make_synth_corpus(sc);
  LabeledUtterances all = synth_labels(corpus, ProbeTask::kSpeakerUtterance);
  Rng shuf(271828);
  shuf.shuffle(all.utt_labels);
  LabeledUtterances train, test;
  stratified_split(all.utt_labels, all, &train, &test);
  ProbeSpec spec;
  spec.task = ProbeTask::kSpeakerUtterance;
  spec.n_classes = 6;
  spec.epochs = 6;
  const ProbeReport r6 = train_probe(train, test, spec, 5);
  const double p6 = 1.0 / 6.0;
  const double tol6 = 3.0 * std::sqrt(p6 * (1.0 - p6) / static_cast<double>(r6.n_test_items));
  if (std::abs(r6.test_accuracy - p6) > tol6) {
    return {false, fmt("6-class shuffled probe %.4f outside %.4f +/- %.4f", r6.test_accuracy, p6, tol6)};
  }

  // 251 classes on random frames with shuffled balanced labels.
  const int n_utts = 160, n_frames = 80, n_chan = 24, k = 251;
  Rng rng(161803);
  LabeledUtterances big;
  std::vector<int> flat(static_cast<size_t>(n_utts) * n_frames);
  for (size_t i = 0; i < flat.size(); ++i) flat[i] = static_cast<int>(i % k);
  rng.shuffle(flat);
  size_t pos = 0;
  for (int u = 0; u < n_utts; ++u) {
    TensorF x = TensorF::zeros({n_frames, n_chan});
    for (auto& v : x.data) v = static_cast<float>(rng.next_gaussian());
    big.reprs.push_back(std::move(x));
    big.frame_labels.emplace_back(flat.begin() + pos, flat.begin() + pos + n_frames);
    pos += n_frames;
  }
  LabeledUtterances btrain, btest;
  stratified_split(std::vector<int>(n_utts, 0), big, &btrain, &btest);
  ProbeSpec bspec;
  bspec.task = ProbeTask::kPhoneFrame;
  bspec.n_classes = k;
  bspec.epochs = 3;
  const ProbeReport r251 = train_probe(btrain, btest, bspec, 9);
  const double p251 = 1.0 / 251.0;
  const double tol251 = 3.0 * std::sqrt(p251 * (1.0 - p251) / static_cast<double>(r251.n_test_items));
  if (std::abs(r251.test_accuracy - p251) > tol251) {
    return {false, fmt("251-class shuffled probe %.5f outside %.6f +/- %.6f", r251.test_accuracy,
                       p251, tol251)};
  }
  return {true, fmt("6-class %.4f ~ %.4f; 251-class %.5f ~ %.6f (chance 0.003984)", r6.test_accuracy,
                    p6, r251.test_accuracy, p251)};
}

// ---------------------------------------------------------------------------
// 9. Determinism and persistence.

Outcome c9_determinism() {
  SynthConfig sc;
  sc.n_utterances = 12;
  sc.min_len = 24;
  sc.max_len = 32;
  sc.min_segment = 6;
  sc.max_segment = 9;
  const std::vector<FeatureMatrix> corpus = make_synth_corpus(sc).feats;

  TrainConfig cfg;
  cfg.model = model_preset("micro", sc.n_channels);
  cfg.t_steps = 8;
  cfg.batch_size = 4;
  cfg.peak_lr = 1e-3;
  cfg.seed = 99;
  cfg.checkpoint_every = 4;

  const fs::path root = scratch_dir();
  const std::string d1 = (root / "det1").string();
  const std::string d2 = (root / "det2").string();
  const std::string d3 = (root / "det3").string();
  pretrain_run(corpus, cfg, d1);
  pretrain_run(corpus, cfg, d2);
  if (read_file(d1 + "/final.tckp") != read_file(d2 + "/final.tckp")) {
    return {false, "two runs from the same seed and config differ"};
  }
  pretrain_run(corpus, cfg, d3, d1 + "/step_4.tckp");
  if (read_file(d1 + "/final.tckp") != read_file(d3 + "/final.tckp")) {
    return {false, "resumed run does not reproduce the uninterrupted run"};
  }

  // Feature file round trip.
  FeatureMatrix f;
  f.utterance_id = "acc_utt";
  f.speaker_id = "acc_spk";
  f.kind = FeatureKind::kOther;
  f.frames = TensorF::zeros({20, 24});
  Rng rng(55);
  for (auto& v : f.frames.data) v = static_cast<float>(rng.next_gaussian());
  const std::string t1 = (root / "a.tfea").string();
  const std::string t2 = (root / "b.tfea").string();
  write_tfea(t1, f);
  const FeatureMatrix back = read_tfea(t1);
  write_tfea(t2, back);
  if (read_file(t1) != read_file(t2) || back.frames.data != f.frames.data ||
      back.utterance_id != f.utterance_id) {
    return {false, "feature file round trip is not byte-identical"};
  }

  // Checkpoint round trip.
  const std::string c2 = (root / "copy.tckp").string();
  save_checkpoint(c2, load_checkpoint(d1 + "/final.tckp"));
  if (read_file(c2) != read_file(d1 + "/final.tckp") ||
      read_file(c2 + ".loss.csv") != read_file(d1 + "/final.tckp.loss.csv")) {
    return {false, "checkpoint round trip is not byte-identical"};
  }
  return {true, "rerun, resume, feature files, and checkpoints all byte-identical"};
}

// ---------------------------------------------------------------------------
// 10. Feature correctness.

Outcome c10_features() {
  for (int64_t n = 0; n <= 4000; n += 17) {
    const int want = n >= 400 ? static_cast<int>((n - 400) / 160 + 1) : 0;
    if (frame_count(n) != want) {
      return {false, fmt("frame_count(%lld) = %d, expected %d", static_cast<long long>(n),
                         frame_count(n), want)};
    }
  }

  // A pure 1 kHz tone concentrates energy in the mel channel whose center
  // sits nearest 1 kHz.
  std::vector<int16_t> tone(kSampleRate);
  for (size_t i = 0; i < tone.size(); ++i) {
    tone[i] = static_cast<int16_t>(12000.0 * std::sin(2.0 * 3.14159265358979323846 * 1000.0 *
                                                      static_cast<double>(i) / kSampleRate));
  }
  const FeatureMatrix fb = fbank(tone, kSampleRate);
  std::vector<double> profile(fb.n_channels(), 0.0);
  for (int t = 0; t < fb.n_frames(); ++t) {
    for (int j = 0; j < fb.n_channels(); ++j) profile[j] += fb.frames.at(t, j);
  }
  const int arg = static_cast<int>(std::max_element(profile.begin(), profile.end()) - profile.begin());
  const std::vector<double> centers = mel_center_frequencies(80, 0.0, kSampleRate / 2.0);
  if (std::abs(centers[arg] - 1000.0) > 80.0) {
    return {false, fmt("tone peaks in channel %d (center %.1f Hz), expected near 1000 Hz", arg,
                       centers[arg])};
  }

  // Per-speaker normalization: zero mean, unit variance, idempotent.
  Rng rng(88);
  std::vector<FeatureMatrix> feats;
  for (int u = 0; u < 6; ++u) {
    FeatureMatrix f;
    f.utterance_id = "u" + std::to_string(u);
    f.speaker_id = "s" + std::to_string(u % 3);
    f.kind = FeatureKind::kOther;
    f.frames = TensorF::zeros({30, 10});
    for (int t = 0; t < 30; ++t) {
      for (int j = 0; j < 10; ++j) {
        f.frames.at(t, j) =
            static_cast<float>(rng.next_gaussian() * (1.0 + j) + 3.0 * (u % 3) - 0.5 * j);
      }
    }
    feats.push_back(std::move(f));
  }
  cmvn_per_speaker(feats);
  for (int spk = 0; spk < 3; ++spk) {
    for (int j = 0; j < 10; ++j) {
      double sum = 0.0, sq = 0.0;
      int64_t n = 0;
      for (const auto& f : feats) {
        if (f.speaker_id != "s" + std::to_string(spk)) continue;
        for (int t = 0; t < f.n_frames(); ++t) {
          sum += f.frames.at(t, j);
          sq += static_cast<double>(f.frames.at(t, j)) * f.frames.at(t, j);
          ++n;
        }
      }
      const double mean = sum / static_cast<double>(n);
      const double var = sq / static_cast<double>(n) - mean * mean;
      if (std::abs(mean) > 1e-4 || std::abs(var - 1.0) > 1e-3) {
        return {false, fmt("speaker %d channel %d not normalized: mean %.2e var %.4f", spk, j, mean, var)};
      }
    }
  }
  std::vector<FeatureMatrix> again = feats;
  cmvn_per_speaker(again);
  for (size_t i = 0; i < feats.size(); ++i) {
    for (size_t c = 0; c < feats[i].frames.data.size(); ++c) {
      if (std::abs(again[i].frames.data[c] - feats[i].frames.data[c]) > 1e-5f) {
        return {false, "normalization is not idempotent"};
      }
    }
  }
  return {true, fmt("frame counts exact; tone peaks at %.1f Hz; normalization clean and idempotent",
                    centers[arg])};
}

}  // namespace

int main() {
  struct Check {
    int id;
    const char* label;
    std::function<Outcome()> fn;
    double budget_s;  // 0 means no runtime bound
  };
  const std::vector<Check> checks = {
      {1, "time-block count formula", c1_block_count, 1.0},
      {2, "alteration statistics", c2_alteration_statistics, 30.0},
      {3, "gradient fidelity", c3_gradient_fidelity, 120.0},
      {4, "learning-rate schedule", c4_schedule, 0.0},
      {5, "parameter counts", c5_parameter_counts, 0.0},
      {6, "learning beats channel-mean baseline", c6_learning_works, 300.0},
      {7, "representation quality ordering", c7_representation_ordering, 1200.0},
      {8, "chance level on shuffled labels", c8_chance_level, 0.0},
      {9, "determinism and persistence", c9_determinism, 0.0},
      {10, "feature correctness", c10_features, 0.0},
  };

  bool all_ok = true;
  for (const Check& c : checks) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool ok = o.ok;
    std::string detail = o.detail;
    if (ok && c.budget_s > 0.0 && secs >= c.budget_s) {
      ok = false;
      detail += fmt("; exceeded the %.0f s budget", c.budget_s);
    }
    std::printf("[%s] %2d %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", c.id, c.label, detail.c_str(),
                secs);
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }

  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  return all_ok ? 0 : 1;
}
