// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spt/alteration.hpp"
#include "spt/downstream.hpp"
#include "spt/encoder.hpp"
#include "spt/errors.hpp"
#include "spt/features.hpp"
#include "spt/graph.hpp"
#include "spt/io.hpp"
#include "spt/pretrain.hpp"
#include "spt/probes.hpp"
#include "spt/rng.hpp"
#include "spt/synth.hpp"
#include "spt/transfer.hpp"

namespace spt {

namespace {

nlohmann::json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

void check_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

template <typename T>
T jget(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + std::string(key) + "' has the wrong type");
  }
}

SynthConfig synth_config_from_json(const nlohmann::json& j, const std::string& where) {
  check_keys(j,
             {"kind", "n_speakers", "n_phones", "n_channels", "n_utterances", "min_len", "max_len",
              "min_segment", "max_segment", "noise_sigma", "seed"},
             where);
  SynthConfig sc;
  sc.n_speakers = jget<int>(j, "n_speakers", sc.n_speakers, where);
  sc.n_phones = jget<int>(j, "n_phones", sc.n_phones, where);
  sc.n_channels = jget<int>(j, "n_channels", sc.n_channels, where);
  sc.n_utterances = jget<int>(j, "n_utterances", sc.n_utterances, where);
  sc.min_len = jget<int>(j, "min_len", sc.min_len, where);
  sc.max_len = jget<int>(j, "max_len", sc.max_len, where);
  sc.min_segment = jget<int>(j, "min_segment", sc.min_segment, where);
  sc.max_segment = jget<int>(j, "max_segment", sc.max_segment, where);
  sc.noise_sigma = jget<double>(j, "noise_sigma", sc.noise_sigma, where);
  sc.seed = jget<uint64_t>(j, "seed", sc.seed, where);
  return sc;
}

std::vector<FeatureMatrix> load_tfea_corpus(const std::string& manifest_path,
                                            std::vector<CorpusEntry>* entries_out) {
  const Corpus c = load_manifest(manifest_path);
  std::vector<FeatureMatrix> feats;
  feats.reserve(c.entries.size());
  for (const auto& e : c.entries) {
    FeatureMatrix f = read_tfea(e.path);
    if (f.utterance_id != e.utterance_id) {
      throw DataError(e.path + ": utterance_id '" + f.utterance_id +
                      "' does not match manifest entry '" + e.utterance_id + "'");
    }
    feats.push_back(std::move(f));
  }
  if (entries_out != nullptr) *entries_out = c.entries;
  return feats;
}

std::vector<FeatureMatrix> make_random_corpus(int n_utterances, int n_frames, int n_channels,
                                              uint64_t seed) {
  if (n_utterances < 1 || n_frames < 1 || n_channels < 1) {
    throw ConfigError("random corpus: counts must be >= 1");
  }
  Rng rng(seed);
  std::vector<FeatureMatrix> feats;
  for (int u = 0; u < n_utterances; ++u) {
    FeatureMatrix f;
    char uid[32], sid[32];
    std::snprintf(uid, sizeof uid, "rnd_%04d", u);
    std::snprintf(sid, sizeof sid, "spk_%d", u % 4);
    f.utterance_id = uid;
    f.speaker_id = sid;
    f.kind = FeatureKind::kOther;
    f.frames = TensorF::zeros({n_frames, n_channels});
    for (auto& v : f.frames.data) v = static_cast<float>(rng.next_gaussian());
    feats.push_back(std::move(f));
  }
  return feats;
}

std::vector<FeatureMatrix> corpus_from_json(const nlohmann::json& j, const std::string& origin) {
  if (!j.is_object()) throw ConfigError(origin + ": corpus must be a JSON object");
  const std::string where = origin + ": corpus";
  const std::string kind = jget<std::string>(j, "kind", "synthetic", where);
  if (kind == "synthetic") {
    return make_synth_corpus(synth_config_from_json(j, where)).feats;
  }
  if (kind == "manifest") {
    check_keys(j, {"kind", "path"}, where);
    const std::string path = jget<std::string>(j, "path", "", where);
    if (path.empty()) throw ConfigError(where + ": field 'path' is required for kind manifest");
    return load_tfea_corpus(path, nullptr);
  }
  if (kind == "random") {
    check_keys(j, {"kind", "n_utterances", "n_frames", "n_channels", "seed"}, where);
    return make_random_corpus(jget<int>(j, "n_utterances", 16, where),
                              jget<int>(j, "n_frames", 64, where),
                              jget<int>(j, "n_channels", 24, where),
                              jget<uint64_t>(j, "seed", 1234, where));
  }
  throw ConfigError(where + ": unknown kind '" + kind + "'");
}

void write_out_manifest(const std::string& out_dir, const std::vector<FeatureMatrix>& feats,
                        const std::vector<CorpusEntry>* src_entries) {
  bool any_labels = false;
  if (src_entries != nullptr) {
    for (const auto& e : *src_entries) any_labels = any_labels || !e.label_path.empty();
  }
  std::string text = "utterance_id\tspeaker_id\tpath";
  if (any_labels) text += "\tlabel_path";
  text += "\n";
  for (size_t i = 0; i < feats.size(); ++i) {
    text += feats[i].utterance_id + "\t" + feats[i].speaker_id + "\t" + feats[i].utterance_id + ".tfea";
    if (any_labels) text += "\t" + (*src_entries)[i].label_path;
    text += "\n";
  }
  write_file_atomic(out_dir + "/manifest.tsv", text);
}

struct FeaturesArgs {
  std::string manifest;
  std::string out_dir;
  std::string type = "fbank";
  bool no_cmvn = false;
};

int cmd_features(const FeaturesArgs& a, std::ostream& out) {
  const Corpus c = load_manifest(a.manifest);
  std::vector<FeatureMatrix> feats;
  feats.reserve(c.entries.size());
  for (const auto& e : c.entries) {
    const std::vector<int16_t> wav = read_wav_mono16k(e.path);
    FeatureMatrix f = a.type == "fbank" ? fbank(wav, kSampleRate) : mfcc(wav, kSampleRate);
    f.utterance_id = e.utterance_id;
    f.speaker_id = e.speaker_id;
    feats.push_back(std::move(f));
  }
  if (!a.no_cmvn) cmvn_per_speaker(feats);
  std::filesystem::create_directories(a.out_dir);
  for (const auto& f : feats) write_tfea(a.out_dir + "/" + f.utterance_id + ".tfea", f);
  write_out_manifest(a.out_dir, feats, &c.entries);
  out << "wrote " << feats.size() << " " << a.type << " files to " << a.out_dir << "\n";
  return 0;
}

struct PretrainArgs {
  std::string config;
  std::string out_dir = "runs/pretrain";
  std::string resume;
  std::string dump_alterations;
  bool quiet = false;
};

int cmd_pretrain(const PretrainArgs& a, std::ostream& out) {
  const nlohmann::json j = parse_json_file(a.config);
  const TrainConfig cfg = train_config_from_json(j);
  const nlohmann::json corpus_cfg =
      j.contains("corpus") ? j.at("corpus") : nlohmann::json{{"kind", "synthetic"}};
  const std::vector<FeatureMatrix> corpus = corpus_from_json(corpus_cfg, a.config);
  const PretrainResult res =
      pretrain_run(corpus, cfg, a.out_dir, a.resume, a.dump_alterations, a.quiet ? nullptr : &out);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", res.loss_history.back().second);
  out << "final checkpoint: " << res.final_checkpoint << "\n";
  out << "final loss: " << buf << "\n";
  return 0;
}

struct ExtractArgs {
  std::string checkpoint;
  std::string layer = "last";
  std::string manifest;
  bool synthetic = false;
  uint64_t data_seed = 1234;
  double ws_scale = 1.0;
  std::string out_dir;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  if (a.manifest.empty() == !a.synthetic) {
    throw ConfigError("extract: provide exactly one of --manifest or --synthetic");
  }
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  TransferConfig tc;
  tc.mode = a.layer == "last" ? TransferMode::kExtractLast : TransferMode::kExtractWs;
  tc.ws_scale = static_cast<float>(a.ws_scale);

  std::vector<FeatureMatrix> feats;
  if (!a.manifest.empty()) {
    feats = load_tfea_corpus(a.manifest, nullptr);
  } else {
    SynthConfig sc;
    sc.seed = a.data_seed;
    feats = make_synth_corpus(sc).feats;
  }
  std::filesystem::create_directories(a.out_dir);
  std::vector<FeatureMatrix> reprs;
  reprs.reserve(feats.size());
  for (const auto& f : feats) {
    const TensorF r = extract_representation(f, ck.state.enc, ck.cfg.model, tc);
    reprs.push_back(representation_as_feature(f, r));
    write_tfea(a.out_dir + "/" + f.utterance_id + ".tfea", reprs.back());
  }
  write_out_manifest(a.out_dir, reprs, nullptr);
  out << "wrote " << reprs.size() << " representation files to " << a.out_dir << "\n";
  return 0;
}

struct ProbeArgs {
  std::string task = "phone_frame";
  std::string classifier = "linear";
  std::string data = "synthetic";
  std::string train_manifest;
  std::string test_manifest;
  std::string checkpoint;
  std::string layer = "last";
  uint64_t seed = 7;
  uint64_t data_seed = 1234;
  int epochs = 10;
  double lr = 4e-3;
  int batch_size = 6;
  int n_classes = 0;  // 0 derives from the data source
  int n_utterances = 64;
  int n_frames = 60;
  int n_channels = 24;
  bool shuffle_labels = false;
  bool json = false;
};

// Keeps every fourth utterance for testing.
void split_labeled(const LabeledUtterances& all, LabeledUtterances* train, LabeledUtterances* test) {
  // Every fourth utterance of each speaker goes to test so both splits
  // cover all speakers even when utterances cycle through them.
  std::map<int, int> seen;
  for (size_t u = 0; u < all.reprs.size(); ++u) {
    const int k = seen[all.utt_labels[u]]++;
    LabeledUtterances* dst = k % 4 == 3 ? test : train;
    dst->reprs.push_back(all.reprs[u]);
    if (u < all.frame_labels.size()) dst->frame_labels.push_back(all.frame_labels[u]);
    if (u < all.utt_labels.size()) dst->utt_labels.push_back(all.utt_labels[u]);
  }
  if (train->reprs.empty() || test->reprs.empty()) {
    throw DataError("probe: need at least 4 utterances to split into train and test");
  }
}

LabeledUtterances labeled_from_manifest(const std::string& path, ProbeTask task,
                                        std::map<std::string, int>* speaker_ids) {
  std::vector<CorpusEntry> entries;
  const std::vector<FeatureMatrix> feats = load_tfea_corpus(path, &entries);
  LabeledUtterances out;
  for (size_t i = 0; i < feats.size(); ++i) {
    const int spk = speaker_ids->emplace(feats[i].speaker_id, static_cast<int>(speaker_ids->size()))
                        .first->second;
    out.reprs.push_back(feats[i].frames);
    switch (task) {
      case ProbeTask::kPhoneFrame:
        if (entries[i].label_path.empty()) {
          throw ConfigError(path + ": entry '" + entries[i].utterance_id +
                            "' needs a label_path for task phone_frame");
        }
        out.frame_labels.push_back(read_label_file(entries[i].label_path));
        break;
      case ProbeTask::kSpeakerFrame:
        out.frame_labels.emplace_back(feats[i].n_frames(), spk);
        break;
      case ProbeTask::kSpeakerUtterance:
        out.frame_labels.emplace_back();
        break;
    }
    out.utt_labels.push_back(spk);
  }
  return out;
}

void shuffle_all_labels(LabeledUtterances& l, ProbeTask task, Rng& rng) {
  if (task == ProbeTask::kSpeakerUtterance) {
    rng.shuffle(l.utt_labels);
    return;
  }
  std::vector<int> flat;
  for (const auto& fl : l.frame_labels) flat.insert(flat.end(), fl.begin(), fl.end());
  rng.shuffle(flat);
  size_t pos = 0;
  for (auto& fl : l.frame_labels) {
    for (auto& v : fl) v = flat[pos++];
  }
}

void to_representations(LabeledUtterances& l, const Checkpoint& ck, const TransferConfig& tc) {
  for (auto& r : l.reprs) {
    FeatureMatrix f;
    f.utterance_id = "probe";
    f.speaker_id = "probe";
    f.kind = FeatureKind::kOther;
    f.frames = r;
    r = extract_representation(f, ck.state.enc, ck.cfg.model, tc);
  }
}

int cmd_probe(const ProbeArgs& a, std::ostream& out) {
  ProbeSpec spec;
  spec.task = probe_task_from_name(a.task);
  spec.classifier = probe_classifier_from_name(a.classifier);
  spec.epochs = a.epochs;
  spec.lr = a.lr;
  spec.batch_size = a.batch_size;

  LabeledUtterances train, test;
  int derived_classes = 0;
  if (!a.train_manifest.empty() || !a.test_manifest.empty()) {
    if (a.train_manifest.empty() || a.test_manifest.empty()) {
      throw ConfigError("probe: --train-manifest and --test-manifest must be given together");
    }
    std::map<std::string, int> speakers;
    train = labeled_from_manifest(a.train_manifest, spec.task, &speakers);
    test = labeled_from_manifest(a.test_manifest, spec.task, &speakers);
    if (spec.task == ProbeTask::kPhoneFrame) {
      for (const auto& fl : train.frame_labels) {
        for (int v : fl) derived_classes = std::max(derived_classes, v + 1);
      }
      for (const auto& fl : test.frame_labels) {
        for (int v : fl) derived_classes = std::max(derived_classes, v + 1);
      }
    } else {
      derived_classes = static_cast<int>(speakers.size());
    }
  } else if (a.data == "synthetic") {
    SynthConfig sc;
    sc.n_utterances = a.n_utterances;
    sc.seed = a.data_seed;
    const SynthCorpus corpus = make_synth_corpus(sc);
    LabeledUtterances all = synth_labels(corpus, spec.task);
    if (a.shuffle_labels) {
      Rng srng(mix_seed(a.data_seed, 99));
      shuffle_all_labels(all, spec.task, srng);
    }
    split_labeled(all, &train, &test);
    derived_classes = spec.task == ProbeTask::kPhoneFrame ? sc.n_phones : sc.n_speakers;
  } else if (a.data == "random") {
    const int k = a.n_classes > 0 ? a.n_classes : 4;
    Rng rng(a.data_seed);
    LabeledUtterances all;
    for (int u = 0; u < a.n_utterances; ++u) {
      TensorF x = TensorF::zeros({a.n_frames, a.n_channels});
      for (auto& v : x.data) v = static_cast<float>(rng.next_gaussian());
      all.reprs.push_back(std::move(x));
      std::vector<int> fl(a.n_frames);
      for (auto& v : fl) v = static_cast<int>(rng.next_below(static_cast<uint64_t>(k)));
      all.frame_labels.push_back(std::move(fl));
      all.utt_labels.push_back(static_cast<int>(rng.next_below(static_cast<uint64_t>(k))));
    }
    split_labeled(all, &train, &test);
    derived_classes = k;
  } else {
    throw ConfigError("probe: --data must be synthetic or random");
  }
  spec.n_classes = a.n_classes > 0 ? a.n_classes : derived_classes;

  if (!a.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    TransferConfig tc;
    tc.mode = a.layer == "last" ? TransferMode::kExtractLast : TransferMode::kExtractWs;
    to_representations(train, ck, tc);
    to_representations(test, ck, tc);
  }

  const ProbeReport r = train_probe(train, test, spec, a.seed);
  if (a.json) {
    out << report_to_json(r).dump(2) << "\n";
  } else {
    out << report_to_table(r);
  }
  return 0;
}

struct GradcheckArgs {
  uint64_t seed = 7;
  int directions = 100;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (a.directions < 1) throw ConfigError("gradcheck: directions must be >= 1");
  ModelConfig cfg;
  cfg.n_layers = 2;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.input_dim = 6;
  cfg.dropout = 0.0;
  const int l_real = 5, l_pad = 6;

  auto [enc, head] = init_params(cfg, mix_seed(a.seed, 1));
  std::vector<TensorD> params;
  for (const TensorF* p : flat_params(enc, &head)) params.push_back(p->cast<double>());
  const std::vector<std::string> names = param_names(cfg, true);

  Rng rng(mix_seed(a.seed, 0));
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
    ids.reserve(ps.size());
    for (size_t i = 0; i < ps.size(); ++i) ids.push_back(g.leaf(ps[i], names[i], true));
    auto fwd = build_forward_with<double>(g, cfg, ids, x, pad, false, nullptr, true);
    const int loss = g.scale(g.abs_sum_masked(fwd.recon_node, target, mask),
                             1.0 / static_cast<double>(count));
    if (grads != nullptr) {
      g.backward(loss);
      grads->clear();
      for (int id : ids) grads->push_back(g.grad(id));
    }
    return g.value(loss).data[0];
  };

  std::vector<TensorD> analytic;
  loss_of(params, &analytic);

  const double eps = 1e-6;
  double max_rel = 0.0;
  for (int k = 0; k < a.directions; ++k) {
    Rng dr(mix_seed(a.seed, 100 + static_cast<uint64_t>(k)));
    std::vector<TensorD> dir;
    double norm = 0.0;
    for (const auto& p : params) {
      TensorD d = TensorD::zeros(p.shape);
      for (auto& v : d.data) {
        v = dr.next_gaussian();
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
    const double rel = std::abs(fd - dot) / std::max({std::abs(dot), std::abs(fd), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "gradcheck: %d directions, max relative error %.3e\n",
                a.directions, max_rel);
  out << buf;
  if (!(max_rel < 1e-5)) {
    throw NumericFault("gradcheck: max relative error exceeds 1e-5");
  }
  out << "[PASS] gradcheck\n";
  return 0;
}

struct SelftestArgs {
  uint64_t seed = 7;
  int64_t draws = 100000;
};

int cmd_selftest(const SelftestArgs& a, std::ostream& out) {
  if (a.draws < 1000) throw ConfigError("selftest: draws must be >= 1000");
  const AlterationConfig cfg;
  const int l = 56, h = 24;
  Rng fill(mix_seed(a.seed, 0));
  TensorF x = TensorF::zeros({l, h});
  for (auto& v : x.data) v = static_cast<float>(fill.next_gaussian());

  int64_t n_blocks = 0;
  int64_t mode_counts[3] = {0, 0, 0};
  int64_t ch_zero = 0;
  int64_t noise_on = 0, noise_n = 0;
  double noise_sum = 0.0, noise_sq = 0.0;
  Rng rng(mix_seed(a.seed, 1));
  for (int64_t i = 0; i < a.draws; ++i) {
    AlterationRecord rt;
    time_alteration(x, cfg, rng, rt);
    for (const TimeBlock& b : rt.time_blocks) {
      ++n_blocks;
      ++mode_counts[static_cast<int>(b.mode)];
    }
    AlterationRecord rc;
    channel_alteration(x, cfg, rng, rc);
    if (!rc.channel_block.has_value()) ++ch_zero;
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

  bool all_ok = true;
  char buf[160];
  auto check = [&](const char* label, double got, double expect, double three_sigma) {
    const bool ok = std::abs(got - expect) <= three_sigma;
    all_ok = all_ok && ok;
    std::snprintf(buf, sizeof buf, "[%s] %s: %.5f (expect %.5f, 3-sigma %.5f)\n",
                  ok ? "PASS" : "FAIL", label, got, expect, three_sigma);
    out << buf;
  };
  auto freq_sigma3 = [](double p, int64_t n) { return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)); };

  check("time mode mask_zero", static_cast<double>(mode_counts[0]) / n_blocks, 0.8, freq_sigma3(0.8, n_blocks));
  check("time mode replace", static_cast<double>(mode_counts[1]) / n_blocks, 0.1, freq_sigma3(0.1, n_blocks));
  check("time mode keep", static_cast<double>(mode_counts[2]) / n_blocks, 0.1, freq_sigma3(0.1, n_blocks));
  check("channel width zero", static_cast<double>(ch_zero) / a.draws, 1.0 / (cfg.w_c + 1),
        freq_sigma3(1.0 / (cfg.w_c + 1), a.draws));
  check("noise applied", static_cast<double>(noise_on) / a.draws, cfg.p_n, freq_sigma3(cfg.p_n, a.draws));
  const double mean = noise_sum / noise_n;
  const double var = noise_sq / noise_n - mean * mean;
  check("noise variance", var, cfg.noise_variance,
        3.0 * cfg.noise_variance * std::sqrt(2.0 / static_cast<double>(noise_n - 1)));

  out << (all_ok ? "selftest passed\n" : "selftest failed\n");
  return all_ok ? 0 : 2;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"self-supervised speech pre-training toolkit"};
  app.require_subcommand(1);

  FeaturesArgs fa;
  CLI::App* c_features = app.add_subcommand("features", "convert WAVs per manifest to feature files");
  c_features->add_option("--manifest", fa.manifest, "input manifest TSV")->required();
  c_features->add_option("--out-dir", fa.out_dir, "output directory")->required();
  c_features->add_option("--type", fa.type, "feature type")->check(CLI::IsMember({"fbank", "mfcc"}));
  c_features->add_flag("--no-cmvn", fa.no_cmvn, "skip per-speaker normalization");

  PretrainArgs pa;
  CLI::App* c_pretrain = app.add_subcommand("pretrain", "run masked-reconstruction pre-training");
  c_pretrain->add_option("--config", pa.config, "JSON training config")->required();
  c_pretrain->add_option("--out-dir", pa.out_dir, "checkpoint directory");
  c_pretrain->add_option("--resume", pa.resume, "checkpoint to resume from");
  c_pretrain->add_option("--dump-alterations", pa.dump_alterations,
                         "write the first batch's alteration records as JSON lines");
  c_pretrain->add_flag("--quiet", pa.quiet, "suppress step logs");

  ExtractArgs ea;
  CLI::App* c_extract = app.add_subcommand("extract", "dump encoder representations");
  c_extract->add_option("--checkpoint", ea.checkpoint, "trained checkpoint")->required();
  c_extract->add_option("--layer", ea.layer, "last or ws")->check(CLI::IsMember({"last", "ws"}));
  c_extract->add_option("--manifest", ea.manifest, "feature-file manifest");
  c_extract->add_flag("--synthetic", ea.synthetic, "use the bundled synthetic corpus");
  c_extract->add_option("--data-seed", ea.data_seed, "synthetic corpus seed");
  c_extract->add_option("--ws-scale", ea.ws_scale, "scale for the ws combination");
  c_extract->add_option("--out-dir", ea.out_dir, "output directory")->required();

  ProbeArgs ba;
  CLI::App* c_probe = app.add_subcommand("probe", "train and evaluate a classifier probe");
  c_probe->add_option("--task", ba.task, "probe task")
      ->check(CLI::IsMember({"phone_frame", "speaker_frame", "speaker_utterance"}));
  c_probe->add_option("--classifier", ba.classifier, "probe classifier")
      ->check(CLI::IsMember({"linear", "hidden1", "concat8_linear"}));
  c_probe->add_option("--data", ba.data, "bundled data source")->check(CLI::IsMember({"synthetic", "random"}));
  c_probe->add_option("--train-manifest", ba.train_manifest, "training feature manifest");
  c_probe->add_option("--test-manifest", ba.test_manifest, "test feature manifest");
  c_probe->add_option("--checkpoint", ba.checkpoint, "probe representations from this checkpoint");
  c_probe->add_option("--layer", ba.layer, "last or ws")->check(CLI::IsMember({"last", "ws"}));
  c_probe->add_option("--seed", ba.seed, "probe training seed");
  c_probe->add_option("--data-seed", ba.data_seed, "bundled data seed");
  c_probe->add_option("--epochs", ba.epochs, "training epochs");
  c_probe->add_option("--lr", ba.lr, "probe learning rate");
  c_probe->add_option("--batch-size", ba.batch_size, "utterances per step");
  c_probe->add_option("--n-classes", ba.n_classes, "class count (random data)");
  c_probe->add_option("--n-utterances", ba.n_utterances, "bundled data utterance count");
  c_probe->add_option("--n-frames", ba.n_frames, "random data frames per utterance");
  c_probe->add_option("--n-channels", ba.n_channels, "random data channels");
  c_probe->add_flag("--shuffle-labels", ba.shuffle_labels, "shuffle labels for chance-level checks");
  c_probe->add_flag("--json", ba.json, "emit the report as JSON");

  GradcheckArgs ga;
  CLI::App* c_gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  c_gradcheck->add_option("--seed", ga.seed, "rng seed");
  c_gradcheck->add_option("--directions", ga.directions, "number of random directions");

  SelftestArgs sa;
  CLI::App* c_selftest = app.add_subcommand("selftest", "statistical checks of the alteration policy");
  c_selftest->add_option("--seed", sa.seed, "rng seed");
  c_selftest->add_option("--draws", sa.draws, "draws per statistic");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return 1;
  }

  try {
    if (c_features->parsed()) return cmd_features(fa, out);
    if (c_pretrain->parsed()) return cmd_pretrain(pa, out);
    if (c_extract->parsed()) return cmd_extract(ea, out);
    if (c_probe->parsed()) return cmd_probe(ba, out);
    if (c_gradcheck->parsed()) return cmd_gradcheck(ga, out);
    if (c_selftest->parsed()) return cmd_selftest(sa, out);
    err << "error: no subcommand given\n";
    return 1;
  } catch (const NumericFault& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace spt
