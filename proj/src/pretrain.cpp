// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "spt/io.hpp"

namespace spt {

const char* loss_scope_name(LossScope s) {
  return s == LossScope::kFullSequence ? "full_sequence" : "altered_only";
}

LossScope loss_scope_from_name(const std::string& name) {
  if (name == "full_sequence") return LossScope::kFullSequence;
  if (name == "altered_only") return LossScope::kAlteredOnly;
  throw ConfigError("unknown loss scope '" + name + "'");
}

void TrainConfig::validate() const {
  if (t_steps < 1) throw ConfigError("train: t_steps must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (peak_lr <= 0.0) throw ConfigError("train: peak_lr must be > 0");
  if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0) {
    throw ConfigError("train: warmup_fraction must lie in (0,1)");
  }
  if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0) {
    throw ConfigError("train: adam betas must lie in [0,1)");
  }
  if (adam_eps <= 0.0) throw ConfigError("train: adam_eps must be > 0");
  if (checkpoint_every < 0) throw ConfigError("train: checkpoint_every must be >= 0");
  alteration.validate();
  model.validate();
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["t_steps"] = cfg.t_steps;
  j["batch_size"] = cfg.batch_size;
  j["peak_lr"] = cfg.peak_lr;
  j["warmup_fraction"] = cfg.warmup_fraction;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["grad_clip"] = cfg.grad_clip;
  j["seed"] = cfg.seed;
  j["loss_scope"] = loss_scope_name(cfg.loss_scope);
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["alteration"] = {
      {"p_t", cfg.alteration.p_t},
      {"w_t", cfg.alteration.w_t},
      {"w_c", cfg.alteration.w_c},
      {"p_n", cfg.alteration.p_n},
      {"noise_variance", cfg.alteration.noise_variance},
      {"enable_time", cfg.alteration.enable_time},
      {"enable_channel", cfg.alteration.enable_channel},
      {"enable_magnitude", cfg.alteration.enable_magnitude},
      {"time_mode_draw",
       cfg.alteration.time_mode_draw == TimeModeDraw::kPerBlock ? "per_block" : "per_utterance"},
  };
  j["model"] = {
      {"n_layers", cfg.model.n_layers},
      {"d_model", cfg.model.d_model},
      {"n_heads", cfg.model.n_heads},
      {"d_ff", cfg.model.d_ff},
      {"input_dim", cfg.model.input_dim},
      {"dropout", cfg.model.dropout},
      {"activation", activation_name(cfg.model.activation)},
      {"pre_layer_norm", cfg.model.pre_layer_norm},
      {"use_position_encoding", cfg.model.use_position_encoding},
  };
  return j;
}

namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError(where + ": unknown field '" + it.key() + "'");
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config: expected a JSON object");
  reject_unknown_keys(j,
                      {"t_steps", "batch_size", "peak_lr", "warmup_fraction", "adam_beta1",
                       "adam_beta2", "adam_eps", "grad_clip", "seed", "loss_scope",
                       "checkpoint_every", "alteration", "model", "corpus"},
                      "train config");
  TrainConfig cfg;
  cfg.t_steps = get_or<int64_t>(j, "t_steps", cfg.t_steps, "train config");
  cfg.batch_size = get_or<int>(j, "batch_size", cfg.batch_size, "train config");
  cfg.peak_lr = get_or<double>(j, "peak_lr", cfg.peak_lr, "train config");
  cfg.warmup_fraction = get_or<double>(j, "warmup_fraction", cfg.warmup_fraction, "train config");
  cfg.adam_beta1 = get_or<double>(j, "adam_beta1", cfg.adam_beta1, "train config");
  cfg.adam_beta2 = get_or<double>(j, "adam_beta2", cfg.adam_beta2, "train config");
  cfg.adam_eps = get_or<double>(j, "adam_eps", cfg.adam_eps, "train config");
  cfg.grad_clip = get_or<double>(j, "grad_clip", cfg.grad_clip, "train config");
  cfg.seed = get_or<uint64_t>(j, "seed", cfg.seed, "train config");
  cfg.loss_scope = loss_scope_from_name(
      get_or<std::string>(j, "loss_scope", loss_scope_name(cfg.loss_scope), "train config"));
  cfg.checkpoint_every = get_or<int64_t>(j, "checkpoint_every", cfg.checkpoint_every, "train config");
  if (j.contains("alteration")) {
    const auto& a = j.at("alteration");
    reject_unknown_keys(a,
                        {"p_t", "w_t", "w_c", "p_n", "noise_variance", "enable_time",
                         "enable_channel", "enable_magnitude", "time_mode_draw"},
                        "alteration config");
    cfg.alteration.p_t = get_or<double>(a, "p_t", cfg.alteration.p_t, "alteration config");
    cfg.alteration.w_t = get_or<int>(a, "w_t", cfg.alteration.w_t, "alteration config");
    cfg.alteration.w_c = get_or<int>(a, "w_c", cfg.alteration.w_c, "alteration config");
    cfg.alteration.p_n = get_or<double>(a, "p_n", cfg.alteration.p_n, "alteration config");
    cfg.alteration.noise_variance =
        get_or<double>(a, "noise_variance", cfg.alteration.noise_variance, "alteration config");
    cfg.alteration.enable_time = get_or<bool>(a, "enable_time", cfg.alteration.enable_time, "alteration config");
    cfg.alteration.enable_channel =
        get_or<bool>(a, "enable_channel", cfg.alteration.enable_channel, "alteration config");
    cfg.alteration.enable_magnitude =
        get_or<bool>(a, "enable_magnitude", cfg.alteration.enable_magnitude, "alteration config");
    const std::string draw = get_or<std::string>(a, "time_mode_draw", "per_block", "alteration config");
    if (draw == "per_block") {
      cfg.alteration.time_mode_draw = TimeModeDraw::kPerBlock;
    } else if (draw == "per_utterance") {
      cfg.alteration.time_mode_draw = TimeModeDraw::kPerUtterance;
    } else {
      throw ConfigError("alteration config: time_mode_draw must be per_block or per_utterance");
    }
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    reject_unknown_keys(m,
                        {"preset", "n_layers", "d_model", "n_heads", "d_ff", "input_dim", "dropout",
                         "activation", "pre_layer_norm", "use_position_encoding"},
                        "model config");
    if (m.contains("preset")) {
      cfg.model = model_preset(get_or<std::string>(m, "preset", "", "model config"),
                               get_or<int>(m, "input_dim", 80, "model config"));
    }
    cfg.model.n_layers = get_or<int>(m, "n_layers", cfg.model.n_layers, "model config");
    cfg.model.d_model = get_or<int>(m, "d_model", cfg.model.d_model, "model config");
    cfg.model.n_heads = get_or<int>(m, "n_heads", cfg.model.n_heads, "model config");
    cfg.model.d_ff = get_or<int>(m, "d_ff", cfg.model.d_ff, "model config");
    cfg.model.input_dim = get_or<int>(m, "input_dim", cfg.model.input_dim, "model config");
    cfg.model.dropout = get_or<double>(m, "dropout", cfg.model.dropout, "model config");
    cfg.model.activation = activation_from_name(
        get_or<std::string>(m, "activation", activation_name(cfg.model.activation), "model config"));
    cfg.model.pre_layer_norm = get_or<bool>(m, "pre_layer_norm", cfg.model.pre_layer_norm, "model config");
    cfg.model.use_position_encoding =
        get_or<bool>(m, "use_position_encoding", cfg.model.use_position_encoding, "model config");
  }
  cfg.validate();
  return cfg;
}

void adam_update(const std::vector<TensorF*>& params, const std::vector<TensorF>& grads,
                 AdamState& st, int64_t t, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
    throw ValidationError("adam_update: group sizes do not match");
  }
  if (t < 1) throw ValidationError("adam_update: step must be >= 1");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    TensorF& m = st.m[i];
    TensorF& v = st.v[i];
    TensorF& w = *params[i];
    require_same_shape(w, grads[i], "adam_update");
    for (size_t k = 0; k < w.data.size(); ++k) {
      const double gk = grads[i].data[k];
      const double mk = beta1 * m.data[k] + (1.0 - beta1) * gk;
      const double vk = beta2 * v.data[k] + (1.0 - beta2) * gk * gk;
      m.data[k] = static_cast<float>(mk);
      v.data[k] = static_cast<float>(vk);
      w.data[k] = static_cast<float>(w.data[k] - lr * (mk / bc1) / (std::sqrt(vk / bc2) + eps));
    }
  }
}

TrainState init_train_state(const TrainConfig& cfg) {
  cfg.validate();
  TrainState st;
  auto [enc, head] = init_params(cfg.model, mix_seed(cfg.seed, 0));
  st.enc = std::move(enc);
  st.head = std::move(head);
  const auto params = flat_params(st.enc, &st.head);
  for (const TensorF* p : params) {
    st.adam.m.push_back(TensorF::zeros(p->shape));
    st.adam.v.push_back(TensorF::zeros(p->shape));
  }
  st.store_rng(Rng(mix_seed(cfg.seed, 1)));
  return st;
}

double lr_at_step(double step, int64_t t_steps, double peak_lr, double warmup_fraction) {
  if (t_steps < 1) throw ConfigError("lr_at_step: t_steps must be >= 1");
  if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0) {
    throw ConfigError("lr_at_step: warmup_fraction must lie in (0,1)");
  }
  if (step < 0.0 || step > static_cast<double>(t_steps)) {
    throw ValidationError("lr_at_step: step out of [0, t_steps]");
  }
  const double warm_end = warmup_fraction * static_cast<double>(t_steps);
  if (step <= warm_end) return peak_lr * (step / warm_end);
  return peak_lr * ((static_cast<double>(t_steps) - step) / (static_cast<double>(t_steps) - warm_end));
}

namespace {

// 1 for every cell the loss covers. Padded frames (beyond the record's real
// length) are always out of scope.
TensorF loss_mask(int l_real, int l_pad, int h, LossScope scope, const AlterationRecord& rec) {
  TensorF m = TensorF::zeros({l_pad, h});
  for (int t = 0; t < l_real; ++t) {
    for (int j = 0; j < h; ++j) {
      bool in = scope == LossScope::kFullSequence;
      if (!in) {
        const bool ft = !rec.altered_frame_flags.empty() && rec.altered_frame_flags[t];
        const bool ch = !rec.altered_channel_flags.empty() && rec.altered_channel_flags[j];
        in = ft || ch;
      }
      if (in) m.at(t, j) = 1.0f;
    }
  }
  return m;
}

}  // namespace

double l1_loss(const TensorF& pred, const TensorF& target, const std::vector<uint8_t>& pad_mask,
               LossScope scope, const AlterationRecord& rec) {
  require_same_shape(pred, target, "l1_loss");
  if (static_cast<int>(pad_mask.size()) != pred.shape[0]) {
    throw ValidationError("l1_loss: pad_mask length does not match frame count");
  }
  int l_real = 0;
  for (size_t t = 0; t < pad_mask.size(); ++t) {
    if (pad_mask[t]) {
      if (static_cast<int>(t) != l_real) {
        throw ValidationError("l1_loss: pad_mask must be a contiguous prefix of real frames");
      }
      ++l_real;
    }
  }
  const TensorF m = loss_mask(l_real, pred.shape[0], pred.shape[1], scope, rec);
  double sum = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    if (m.data[i] != 0.0f) {
      sum += std::abs(static_cast<double>(pred.data[i]) - target.data[i]);
      ++count;
    }
  }
  if (count == 0) throw DataError("l1_loss: no cells in scope (degenerate batch)");
  return sum / static_cast<double>(count);
}

StepResult train_step(TrainState& state, const std::vector<const FeatureMatrix*>& batch,
                      const TrainConfig& cfg, std::vector<AlterationRecord>* out_records) {
  cfg.validate();
  if (batch.empty()) throw ValidationError("train_step: empty batch");
  const int H = cfg.model.input_dim;
  int l_max = 0;
  for (const FeatureMatrix* f : batch) {
    f->validate();
    if (f->n_channels() != H) {
      throw DataError("train_step: utterance " + f->utterance_id + " has " +
                      std::to_string(f->n_channels()) + " channels, model expects " + std::to_string(H));
    }
    l_max = std::max(l_max, f->n_frames());
  }

  Rng rng = state.rng();
  GraphF g;
  const auto params = flat_params(state.enc, &state.head);
  const std::vector<int> pids =
      make_param_leaves<float>(g, cfg.model, {params.begin(), params.end()}, true, true);

  int sum_node = -1;
  int64_t total_count = 0;
  for (const FeatureMatrix* f : batch) {
    const int L = f->n_frames();
    auto [altered, rec] = alter(f->frames, cfg.alteration, rng);
    if (out_records != nullptr) out_records->push_back(rec);

    TensorF x_pad = TensorF::zeros({l_max, H});
    TensorF tgt_pad = TensorF::zeros({l_max, H});
    for (int t = 0; t < L; ++t) {
      for (int j = 0; j < H; ++j) {
        x_pad.at(t, j) = altered.at(t, j);
        tgt_pad.at(t, j) = f->frames.at(t, j);
      }
    }
    std::vector<uint8_t> pad_mask(l_max, 0);
    std::fill(pad_mask.begin(), pad_mask.begin() + L, 1);
    const TensorF m = loss_mask(L, l_max, H, cfg.loss_scope, rec);
    for (float v : m.data) total_count += v != 0.0f ? 1 : 0;

    auto fwd = build_forward_with<float>(g, cfg.model, pids, x_pad, pad_mask, true, &rng, true);
    const int abs_node = g.abs_sum_masked(fwd.recon_node, tgt_pad, m);
    sum_node = sum_node < 0 ? abs_node : g.add(sum_node, abs_node);
  }
  if (total_count == 0) throw DataError("train_step: no cells in scope (degenerate batch)");
  const int loss_node = g.scale(sum_node, static_cast<float>(1.0 / static_cast<double>(total_count)));

  const double loss = g.value(loss_node).data[0];
  if (!std::isfinite(loss)) {
    try {
      g.check_finite_or_throw();
    } catch (const NumericFault& e) {
      throw NumericFault(std::string(e.what()) + " at step " + std::to_string(state.step + 1));
    }
    throw NumericFault("non-finite loss at step " + std::to_string(state.step + 1));
  }
  g.backward(loss_node);

  std::vector<TensorF> grads;
  grads.reserve(pids.size());
  double sq_norm = 0.0;
  for (int id : pids) {
    grads.push_back(g.grad(id));
    for (float v : grads.back().data) sq_norm += static_cast<double>(v) * v;
  }
  const double grad_norm = std::sqrt(sq_norm);
  if (cfg.grad_clip > 0.0 && grad_norm > cfg.grad_clip) {
    const float s = static_cast<float>(cfg.grad_clip / grad_norm);
    for (auto& gt : grads) {
      for (auto& v : gt.data) v *= s;
    }
  }

  const int64_t t = state.step + 1;
  const double lr = lr_at_step(static_cast<double>(t), cfg.t_steps, cfg.peak_lr, cfg.warmup_fraction);
  adam_update(params, grads, state.adam, t, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

  state.step = t;
  state.store_rng(rng);
  return StepResult{loss, lr, grad_norm};
}

std::vector<int> batch_indices(uint64_t seed, int corpus_size, int64_t step, int batch_size) {
  if (corpus_size < 1) throw ValidationError("batch_indices: empty corpus");
  std::vector<int> out(batch_size);
  const int64_t base = step * batch_size;
  int64_t cached_epoch = -1;
  std::vector<int> perm;
  for (int i = 0; i < batch_size; ++i) {
    const int64_t pos = base + i;
    const int64_t epoch = pos / corpus_size;
    if (epoch != cached_epoch) {
      perm.resize(corpus_size);
      for (int k = 0; k < corpus_size; ++k) perm[k] = k;
      Rng r(mix_seed(seed, static_cast<uint64_t>(epoch)));
      r.shuffle(perm);
      cached_epoch = epoch;
    }
    out[i] = perm[pos % corpus_size];
  }
  return out;
}

namespace {

constexpr uint32_t kCheckpointVersion = 1;

void write_tensor(ByteWriter& w, const std::string& name, const TensorF& t) {
  w.str16(name);
  w.u32(static_cast<uint32_t>(t.shape.size()));
  for (int d : t.shape) w.u32(static_cast<uint32_t>(d));
  w.bytes(t.data.data(), t.data.size() * 4);
}

TensorF read_tensor(ByteReader& r, const std::string& path, std::string* name_out) {
  *name_out = r.str16();
  const uint32_t nd = r.u32();
  if (nd < 1 || nd > 2) throw DataError(path + ": tensor '" + *name_out + "' has unsupported rank");
  std::vector<int> shape(nd);
  for (auto& d : shape) d = static_cast<int>(r.u32());
  TensorF t = TensorF::zeros(shape);
  r.bytes(t.data.data(), t.data.size() * 4);
  return t;
}

std::string loss_csv(const std::vector<std::pair<int64_t, double>>& history) {
  std::string s = "step,loss\n";
  char buf[64];
  for (const auto& [step, loss] : history) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(step), loss);
    s += buf;
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  ck.cfg.validate();
  ByteWriter w;
  w.magic("TCKP1");
  w.u32(kCheckpointVersion);
  const std::string cfg_json = train_config_to_json(ck.cfg).dump();
  w.u32(static_cast<uint32_t>(cfg_json.size()));
  w.bytes(cfg_json.data(), cfg_json.size());
  w.u64(static_cast<uint64_t>(ck.state.step));
  for (uint64_t s : ck.state.rng_state) w.u64(s);

  const auto params = flat_params(ck.state.enc, &ck.state.head);
  const auto names = param_names(ck.cfg.model, true);
  if (params.size() != names.size() || ck.state.adam.m.size() != params.size() ||
      ck.state.adam.v.size() != params.size()) {
    throw ValidationError("save_checkpoint: state does not match config");
  }
  w.u32(static_cast<uint32_t>(3 * params.size()));
  for (size_t i = 0; i < params.size(); ++i) write_tensor(w, names[i], *params[i]);
  for (size_t i = 0; i < params.size(); ++i) write_tensor(w, "adam.m." + names[i], ck.state.adam.m[i]);
  for (size_t i = 0; i < params.size(); ++i) write_tensor(w, "adam.v." + names[i], ck.state.adam.v[i]);
  write_file_atomic(path, w.str());
  write_file_atomic(path + ".loss.csv", loss_csv(ck.loss_history));
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string data = read_file(path);
  ByteReader r(data, path);
  r.expect_magic("TCKP1", 5);
  const uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError(path + ": incompatible checkpoint version " + std::to_string(version) +
                    ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  const uint32_t cfg_len = r.u32();
  std::string cfg_json(cfg_len, '\0');
  r.bytes(cfg_json.data(), cfg_len);
  Checkpoint ck;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(cfg_json);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": embedded config is not valid JSON: " + e.what());
  }
  ck.cfg = train_config_from_json(j);
  ck.state.step = static_cast<int64_t>(r.u64());
  for (auto& s : ck.state.rng_state) s = r.u64();

  auto [enc, head] = init_params(ck.cfg.model, 0);
  ck.state.enc = std::move(enc);
  ck.state.head = std::move(head);
  const auto params = flat_params(ck.state.enc, &ck.state.head);
  const auto names = param_names(ck.cfg.model, true);
  ck.state.adam.m.resize(params.size());
  ck.state.adam.v.resize(params.size());

  const uint32_t n_tensors = r.u32();
  if (n_tensors != 3 * params.size()) {
    throw DataError(path + ": expected " + std::to_string(3 * params.size()) + " tensors, found " +
                    std::to_string(n_tensors));
  }
  auto expect = [&](const std::string& want, TensorF& dst, const std::vector<int>& want_shape) {
    std::string name;
    TensorF t = read_tensor(r, path, &name);
    if (name != want) throw DataError(path + ": expected tensor '" + want + "', found '" + name + "'");
    if (t.shape != want_shape) {
      throw DataError(path + ": tensor '" + name + "' has shape " + t.shape_str());
    }
    dst = std::move(t);
  };
  for (size_t i = 0; i < params.size(); ++i) expect(names[i], *params[i], params[i]->shape);
  for (size_t i = 0; i < params.size(); ++i) expect("adam.m." + names[i], ck.state.adam.m[i], params[i]->shape);
  for (size_t i = 0; i < params.size(); ++i) expect("adam.v." + names[i], ck.state.adam.v[i], params[i]->shape);
  r.expect_exhausted();

  const std::string csv_path = path + ".loss.csv";
  if (std::filesystem::exists(csv_path)) {
    const std::string csv = read_file(csv_path);
    std::istringstream lines(csv);
    std::string line;
    if (!std::getline(lines, line) || line != "step,loss") {
      throw DataError(csv_path + ": expected 'step,loss' header");
    }
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const size_t comma = line.find(',');
      if (comma == std::string::npos) throw DataError(csv_path + ": malformed row '" + line + "'");
      try {
        ck.loss_history.emplace_back(std::stoll(line.substr(0, comma)),
                                     std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        throw DataError(csv_path + ": malformed row '" + line + "'");
      }
    }
  }
  return ck;
}

PretrainResult pretrain_run(const std::vector<FeatureMatrix>& corpus, const TrainConfig& cfg,
                            const std::string& checkpoint_dir, const std::string& resume_from,
                            const std::string& dump_alterations, std::ostream* log) {
  cfg.validate();
  if (corpus.empty()) throw DataError("pretrain_run: empty corpus");
  for (const auto& f : corpus) f.validate();
  std::filesystem::create_directories(checkpoint_dir);

  Checkpoint ck;
  if (!resume_from.empty()) {
    ck = load_checkpoint(resume_from);
    const std::string want = train_config_to_json(cfg).dump();
    const std::string have = train_config_to_json(ck.cfg).dump();
    if (want != have) {
      throw ConfigError("pretrain_run: resume config does not match checkpoint " + resume_from);
    }
    while (!ck.loss_history.empty() && ck.loss_history.back().first > ck.state.step) {
      ck.loss_history.pop_back();
    }
  } else {
    ck.cfg = cfg;
    ck.state = init_train_state(cfg);
  }

  const int n = static_cast<int>(corpus.size());
  bool first_step = true;
  while (ck.state.step < cfg.t_steps) {
    const std::vector<int> idx = batch_indices(cfg.seed, n, ck.state.step, cfg.batch_size);
    std::vector<const FeatureMatrix*> batch;
    batch.reserve(idx.size());
    for (int i : idx) batch.push_back(&corpus[i]);

    std::vector<AlterationRecord> records;
    const bool want_records = first_step && !dump_alterations.empty();
    const StepResult res = train_step(ck.state, batch, cfg, want_records ? &records : nullptr);
    ck.loss_history.emplace_back(ck.state.step, res.loss);

    if (want_records) {
      std::string out;
      for (const auto& rec : records) out += record_to_json(rec).dump() + "\n";
      write_file_atomic(dump_alterations, out);
    }
    first_step = false;

    if (log != nullptr && (ck.state.step % 100 == 0 || ck.state.step == cfg.t_steps)) {
      (*log) << "step " << ck.state.step << "/" << cfg.t_steps << " loss " << res.loss << " lr "
             << res.lr << "\n";
    }
    if (cfg.checkpoint_every > 0 && ck.state.step % cfg.checkpoint_every == 0 &&
        ck.state.step < cfg.t_steps) {
      save_checkpoint(checkpoint_dir + "/step_" + std::to_string(ck.state.step) + ".tckp", ck);
    }
  }

  const std::string final_path = checkpoint_dir + "/final.tckp";
  save_checkpoint(final_path, ck);
  return PretrainResult{final_path, ck.loss_history};
}

}  // namespace spt
