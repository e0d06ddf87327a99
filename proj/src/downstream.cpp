// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/downstream.hpp"

#include <algorithm>
#include <cmath>

namespace spt {

DownstreamModel build_downstream(const Checkpoint& ck, const TransferConfig& tc,
                                 const ProbeSpec& spec, uint64_t seed) {
  spec.validate();
  DownstreamModel m;
  m.tc = tc;
  m.mcfg = ck.cfg.model;
  m.spec = spec;
  m.enc = ck.state.enc;
  if (!tc.frozen()) {
    m.encoder_lr = tc.finetune_lr > 0.0 ? tc.finetune_lr : finetune_lr_for_depth(m.mcfg.n_layers);
  }
  if (tc.weighted_sum()) {
    m.ws_w = TensorF::zeros({m.mcfg.n_layers});
    if (!tc.ws_weights.empty()) {
      if (static_cast<int>(tc.ws_weights.size()) != m.mcfg.n_layers) {
        throw ConfigError("build_downstream: ws_weights length must equal n_layers");
      }
      for (int i = 0; i < m.mcfg.n_layers; ++i) m.ws_w.data[i] = tc.ws_weights[i];
    }
    m.ws_g = TensorF::full({1}, tc.ws_scale);
  }

  int d = m.mcfg.d_model;
  if (spec.classifier == ProbeClassifier::kConcat8Linear) d *= 8;
  Rng rng(mix_seed(seed, 2));
  auto gauss = [&](std::vector<int> shape) {
    TensorF t = TensorF::zeros(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.next_gaussian() * 0.02);
    return t;
  };
  if (spec.classifier == ProbeClassifier::kHidden1) {
    m.cls_w1 = gauss({d, d});
    m.cls_b1 = TensorF::zeros({d});
    m.cls_w2 = gauss({d, spec.n_classes});
    m.cls_b2 = TensorF::zeros({spec.n_classes});
  } else {
    m.cls_w1 = gauss({d, spec.n_classes});
    m.cls_b1 = TensorF::zeros({spec.n_classes});
  }
  return m;
}

namespace {

// Row-shift selection matrix: out[t] = in[clamp(t+offset)].
TensorF shift_matrix(int l, int offset) {
  TensorF s = TensorF::zeros({l, l});
  for (int t = 0; t < l; ++t) s.at(t, std::clamp(t + offset, 0, l - 1)) = 1.0f;
  return s;
}

int concat8_graph(GraphF& g, int rep, int l) {
  std::vector<int> parts;
  for (int o = -4; o < 4; ++o) {
    parts.push_back(g.matmul(g.constant(shift_matrix(l, o), "concat8_shift"), rep));
  }
  return g.concat_cols(parts);
}

struct ParamGroup {
  std::vector<TensorF*> tensors;
  double lr = 0.0;
};

}  // namespace

DownstreamResult train_downstream(DownstreamModel& model, const LabeledUtterances& train,
                                  const LabeledUtterances& test, int64_t steps, uint64_t seed,
                                  const SpecAugmentConfig& sa) {
  const ProbeSpec& spec = model.spec;
  spec.validate();
  if (train.reprs.empty() || test.reprs.empty()) {
    throw DataError("train_downstream: empty train or test set");
  }
  const bool frozen = model.tc.frozen();
  const bool ws = model.tc.weighted_sum();
  const int n_utt = static_cast<int>(train.reprs.size());
  const int d_model = model.mcfg.d_model;

  // frozen modes compute encoder outputs once, outside any graph
  std::vector<std::vector<TensorF>> frozen_layers(frozen ? n_utt : 0);
  if (frozen) {
    for (int u = 0; u < n_utt; ++u) {
      const std::vector<uint8_t> pad(train.reprs[u].shape[0], 1);
      frozen_layers[u] = encode(train.reprs[u], model.enc, model.mcfg, pad);
    }
  }

  ParamGroup enc_group, cls_group;
  cls_group.lr = spec.lr;
  cls_group.tensors = {&model.cls_w1, &model.cls_b1};
  if (spec.classifier == ProbeClassifier::kHidden1) {
    cls_group.tensors.push_back(&model.cls_w2);
    cls_group.tensors.push_back(&model.cls_b2);
  }
  if (ws) {
    cls_group.tensors.push_back(&model.ws_w);
    cls_group.tensors.push_back(&model.ws_g);
  }
  if (!frozen) {
    enc_group.lr = model.encoder_lr;
    for (TensorF* p : flat_params(model.enc, nullptr)) enc_group.tensors.push_back(p);
  }
  AdamState enc_adam, cls_adam;
  for (TensorF* p : enc_group.tensors) {
    enc_adam.m.push_back(TensorF::zeros(p->shape));
    enc_adam.v.push_back(TensorF::zeros(p->shape));
  }
  for (TensorF* p : cls_group.tensors) {
    cls_adam.m.push_back(TensorF::zeros(p->shape));
    cls_adam.v.push_back(TensorF::zeros(p->shape));
  }

  Rng rng(mix_seed(seed, 3));
  DownstreamResult res;
  for (int64_t step = 0; step < steps; ++step) {
    const std::vector<int> idx = batch_indices(seed, n_utt, step, spec.batch_size);

    GraphF g;
    std::vector<int> enc_ids;
    if (!frozen) {
      const auto enc_tensors = flat_params(model.enc, nullptr);
      enc_ids = make_param_leaves<float>(g, model.mcfg,
                                         {enc_tensors.begin(), enc_tensors.end()}, true, false);
    }
    std::vector<int> cls_ids;
    for (TensorF* p : cls_group.tensors) cls_ids.push_back(g.leaf(*p, "downstream_param", true));
    const int ws_w_id = ws ? cls_ids[cls_ids.size() - 2] : -1;
    const int ws_g_id = ws ? cls_ids[cls_ids.size() - 1] : -1;

    int loss_node = -1;
    int64_t total_items = 0;
    std::vector<std::pair<int, int>> utt_nodes;  // (xent node, item count)
    for (int u : idx) {
      const TensorF& raw = train.reprs[u];
      const int L = raw.shape[0];
      int rep;
      if (frozen) {
        if (model.tc.mode == TransferMode::kExtractLast) {
          rep = g.constant(frozen_layers[u].back(), "frozen_rep");
        } else {
          std::vector<int> layer_ids;
          for (const TensorF& h : frozen_layers[u]) layer_ids.push_back(g.constant(h, "frozen_layer"));
          rep = g.ws_combine(layer_ids, ws_w_id, ws_g_id);
        }
      } else {
        const TensorF masked = specaugment_mask(raw, sa, rng);
        const std::vector<uint8_t> pad(L, 1);
        auto fwd = build_forward_with<float>(g, model.mcfg, enc_ids, masked, pad, true, &rng, false);
        rep = model.tc.mode == TransferMode::kFinetune
                  ? fwd.last_node
                  : g.ws_combine(fwd.layer_nodes, ws_w_id, ws_g_id);
      }
      if (spec.classifier == ProbeClassifier::kConcat8Linear) rep = concat8_graph(g, rep, L);

      int items;
      int logits;
      std::vector<int> labels;
      if (spec.frame_level()) {
        labels = train.frame_labels.at(u);
        if (static_cast<int>(labels.size()) != L) {
          throw DataError("train_downstream: label count mismatch on utterance " + std::to_string(u));
        }
        items = L;
        logits = rep;
      } else {
        labels = {train.utt_labels.at(u)};
        items = 1;
        logits = g.mean_rows(rep);
      }
      int z = g.add_row(g.matmul(logits, cls_ids[0]), cls_ids[1]);
      if (spec.classifier == ProbeClassifier::kHidden1) {
        z = g.add_row(g.matmul(g.relu(z), cls_ids[2]), cls_ids[3]);
      }
      for (int lab : labels) {
        if (lab < 0 || lab >= spec.n_classes) {
          throw DataError("train_downstream: label " + std::to_string(lab) + " outside [0, " +
                          std::to_string(spec.n_classes) + ")");
        }
      }
      utt_nodes.emplace_back(g.softmax_xent(z, labels), items);
      total_items += items;
    }
    for (const auto& [xent, items] : utt_nodes) {
      const int scaled = g.scale(xent, static_cast<float>(static_cast<double>(items) /
                                                          static_cast<double>(total_items)));
      loss_node = loss_node < 0 ? scaled : g.add(loss_node, scaled);
    }

    const double loss = g.value(loss_node).data[0];
    if (!std::isfinite(loss)) {
      g.check_finite_or_throw();
      throw NumericFault("non-finite downstream loss at step " + std::to_string(step + 1));
    }
    g.backward(loss_node);
    res.loss_curve.push_back(loss);

    const int64_t t = step + 1;
    if (!frozen) {
      std::vector<TensorF> enc_grads;
      enc_grads.reserve(enc_ids.size());
      for (int id : enc_ids) enc_grads.push_back(g.grad(id));
      adam_update(enc_group.tensors, enc_grads, enc_adam, t, enc_group.lr, 0.9, 0.999, 1e-8);
    }
    std::vector<TensorF> cls_grads;
    cls_grads.reserve(cls_ids.size());
    for (int id : cls_ids) cls_grads.push_back(g.grad(id));
    adam_update(cls_group.tensors, cls_grads, cls_adam, t, cls_group.lr, 0.9, 0.999, 1e-8);
  }
  res.final_loss = res.loss_curve.empty() ? 0.0 : res.loss_curve.back();

  // evaluation: clean inputs, no dropout, current parameters
  int64_t correct = 0, total = 0;
  std::vector<float> ws_w_vec(model.ws_w.data.begin(), model.ws_w.data.end());
  for (size_t u = 0; u < test.reprs.size(); ++u) {
    const TensorF& raw = test.reprs[u];
    const std::vector<uint8_t> pad(raw.shape[0], 1);
    const std::vector<TensorF> layers = encode(raw, model.enc, model.mcfg, pad);
    TensorF rep = ws ? weighted_sum_layers(layers, ws_w_vec, model.ws_g.data[0]) : layers.back();
    if (spec.classifier == ProbeClassifier::kConcat8Linear) rep = concat_windows(rep, 8);

    TensorF x = spec.frame_level() ? rep : TensorF({1, d_model}, utterance_pool(rep).data);
    TensorF z = add_row(matmul(x, model.cls_w1), model.cls_b1);
    if (spec.classifier == ProbeClassifier::kHidden1) {
      for (auto& v : z.data) v = v > 0.0f ? v : 0.0f;
      z = add_row(matmul(z, model.cls_w2), model.cls_b2);
    }
    std::vector<int> labels = spec.frame_level() ? test.frame_labels.at(u)
                                                 : std::vector<int>{test.utt_labels.at(u)};
    for (int i = 0; i < z.shape[0]; ++i) {
      int arg = 0;
      for (int j = 1; j < z.shape[1]; ++j) {
        if (z.at(i, j) > z.at(i, arg)) arg = j;
      }
      correct += arg == labels[i] ? 1 : 0;
      ++total;
    }
  }
  res.test_accuracy = static_cast<double>(correct) / static_cast<double>(total);
  return res;
}

}  // namespace spt
