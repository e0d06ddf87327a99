// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#include "spt/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "spt/graph.hpp"
#include "spt/pretrain.hpp"
#include "spt/rng.hpp"

namespace spt {

const char* probe_task_name(ProbeTask t) {
  switch (t) {
    case ProbeTask::kPhoneFrame: return "phone_frame";
    case ProbeTask::kSpeakerFrame: return "speaker_frame";
    case ProbeTask::kSpeakerUtterance: return "speaker_utterance";
  }
  return "?";
}

ProbeTask probe_task_from_name(const std::string& name) {
  if (name == "phone_frame") return ProbeTask::kPhoneFrame;
  if (name == "speaker_frame") return ProbeTask::kSpeakerFrame;
  if (name == "speaker_utterance") return ProbeTask::kSpeakerUtterance;
  throw ConfigError("unknown probe task '" + name + "'");
}

const char* probe_classifier_name(ProbeClassifier c) {
  switch (c) {
    case ProbeClassifier::kLinear: return "linear";
    case ProbeClassifier::kHidden1: return "hidden1";
    case ProbeClassifier::kConcat8Linear: return "concat8_linear";
  }
  return "?";
}

ProbeClassifier probe_classifier_from_name(const std::string& name) {
  if (name == "linear") return ProbeClassifier::kLinear;
  if (name == "hidden1") return ProbeClassifier::kHidden1;
  if (name == "concat8_linear") return ProbeClassifier::kConcat8Linear;
  throw ConfigError("unknown probe classifier '" + name + "'");
}

void ProbeSpec::validate() const {
  if (n_classes < 2) throw ConfigError("probe: n_classes must be >= 2");
  if (lr <= 0.0) throw ConfigError("probe: lr must be > 0");
  if (batch_size < 1) throw ConfigError("probe: batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("probe: epochs must be >= 1");
  if (classifier == ProbeClassifier::kConcat8Linear && !frame_level()) {
    throw ConfigError("probe: the concat8 classifier applies to frame-level tasks only");
  }
}

TensorF utterance_pool(const TensorF& repr) {
  require_2d(repr, "utterance_pool");
  if (repr.shape[0] < 1) throw ValidationError("utterance_pool: empty representation");
  const int L = repr.shape[0], D = repr.shape[1];
  TensorF out = TensorF::zeros({D});
  for (int t = 0; t < L; ++t)
    for (int j = 0; j < D; ++j) out.data[j] += repr.at(t, j);
  for (auto& v : out.data) v /= static_cast<float>(L);
  return out;
}

TensorF concat_windows(const TensorF& repr, int k) {
  require_2d(repr, "concat_windows");
  if (k < 1) throw ValidationError("concat_windows: k must be >= 1");
  const int L = repr.shape[0], D = repr.shape[1];
  TensorF out = TensorF::zeros({L, k * D});
  const int lo = -(k / 2), hi = (k + 1) / 2;  // offsets lo .. hi-1
  for (int t = 0; t < L; ++t) {
    int col = 0;
    for (int o = lo; o < hi; ++o) {
      const int src = std::clamp(t + o, 0, L - 1);
      for (int j = 0; j < D; ++j) out.at(t, col + j) = repr.at(src, j);
      col += D;
    }
  }
  return out;
}

namespace {

struct FlatData {
  TensorF x;               // [N, d]
  std::vector<int> y;      // [N]
  std::vector<int> owner;  // utterance index per item (for splits)
};

FlatData flatten(const LabeledUtterances& data, const ProbeSpec& spec,
                 const std::vector<int>& utt_subset) {
  FlatData out;
  if (data.reprs.empty()) throw DataError("probe: no utterances");
  int d = data.reprs[0].shape[1];
  if (spec.classifier == ProbeClassifier::kConcat8Linear) d *= 8;

  std::vector<float> rows;
  for (int u : utt_subset) {
    const TensorF& r = data.reprs[u];
    require_2d(r, "probe features");
    if (spec.frame_level()) {
      if (u >= static_cast<int>(data.frame_labels.size())) {
        throw DataError("probe: missing frame labels for utterance " + std::to_string(u));
      }
      const auto& labels = data.frame_labels[u];
      if (static_cast<int>(labels.size()) != r.shape[0]) {
        throw DataError("probe: utterance " + std::to_string(u) + " has " +
                        std::to_string(r.shape[0]) + " frames but " + std::to_string(labels.size()) +
                        " labels");
      }
      const TensorF feats =
          spec.classifier == ProbeClassifier::kConcat8Linear ? concat_windows(r, 8) : r;
      for (int t = 0; t < feats.shape[0]; ++t) {
        for (int j = 0; j < feats.shape[1]; ++j) rows.push_back(feats.at(t, j));
        out.y.push_back(labels[t]);
        out.owner.push_back(u);
      }
    } else {
      if (u >= static_cast<int>(data.utt_labels.size())) {
        throw DataError("probe: missing utterance label for utterance " + std::to_string(u));
      }
      const TensorF pooled = utterance_pool(r);
      for (float v : pooled.data) rows.push_back(v);
      out.y.push_back(data.utt_labels[u]);
      out.owner.push_back(u);
    }
  }
  const int n = static_cast<int>(out.y.size());
  if (n == 0) throw DataError("probe: no labeled items");
  out.x = TensorF({n, d}, std::move(rows));
  for (int v : out.y) {
    if (v < 0 || v >= spec.n_classes) {
      throw DataError("probe: label " + std::to_string(v) + " outside [0, " +
                      std::to_string(spec.n_classes) + ")");
    }
  }
  return out;
}

struct Classifier {
  bool hidden = false;
  TensorF w1, b1, w2, b2;

  static Classifier init(int d, int n_classes, bool hidden, Rng& rng) {
    Classifier c;
    c.hidden = hidden;
    auto gauss = [&](std::vector<int> shape) {
      TensorF t = TensorF::zeros(std::move(shape));
      for (auto& v : t.data) v = static_cast<float>(rng.next_gaussian() * 0.02);
      return t;
    };
    if (hidden) {
      c.w1 = gauss({d, d});
      c.b1 = TensorF::zeros({d});
      c.w2 = gauss({d, n_classes});
      c.b2 = TensorF::zeros({n_classes});
    } else {
      c.w1 = gauss({d, n_classes});
      c.b1 = TensorF::zeros({n_classes});
    }
    return c;
  }

  std::vector<TensorF*> params() {
    return hidden ? std::vector<TensorF*>{&w1, &b1, &w2, &b2} : std::vector<TensorF*>{&w1, &b1};
  }

  TensorF logits(const TensorF& x) const {
    if (!hidden) return add_row(matmul(x, w1), b1);
    TensorF h = add_row(matmul(x, w1), b1);
    for (auto& v : h.data) v = v > 0.0f ? v : 0.0f;
    return add_row(matmul(h, w2), b2);
  }

  int logits_graph(GraphF& g, int x, const std::vector<int>& pids) const {
    if (!hidden) return g.add_row(g.matmul(x, pids[0]), pids[1]);
    int h = g.relu(g.add_row(g.matmul(x, pids[0]), pids[1]));
    return g.add_row(g.matmul(h, pids[2]), pids[3]);
  }
};

double accuracy(const Classifier& c, const TensorF& x, const std::vector<int>& y,
                std::vector<ClassCount>* per_class, int n_classes) {
  const TensorF z = c.logits(x);
  int64_t correct = 0;
  if (per_class != nullptr) per_class->assign(n_classes, ClassCount{});
  for (int i = 0; i < z.shape[0]; ++i) {
    int arg = 0;
    for (int j = 1; j < z.shape[1]; ++j) {
      if (z.at(i, j) > z.at(i, arg)) arg = j;
    }
    const bool ok = arg == y[i];
    correct += ok ? 1 : 0;
    if (per_class != nullptr) {
      auto& cc = (*per_class)[y[i]];
      cc.support += 1;
      cc.correct += ok ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(z.shape[0]);
}

TensorF take_rows(const TensorF& x, const std::vector<int>& idx) {
  TensorF out = TensorF::zeros({static_cast<int>(idx.size()), x.shape[1]});
  for (size_t i = 0; i < idx.size(); ++i)
    for (int j = 0; j < x.shape[1]; ++j) out.at(static_cast<int>(i), j) = x.at(idx[i], j);
  return out;
}

}  // namespace

ProbeReport train_probe(const LabeledUtterances& train, const LabeledUtterances& test,
                        const ProbeSpec& spec, uint64_t seed) {
  spec.validate();
  if (train.reprs.empty() || test.reprs.empty()) throw DataError("probe: empty train or test set");

  Rng rng(seed);

  // dev carve-out by utterance, roughly 10%, at least one when possible
  const int n_utt = static_cast<int>(train.reprs.size());
  std::vector<int> order(n_utt);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  int n_dev = n_utt / 10;
  if (n_dev == 0 && n_utt >= 2) n_dev = 1;
  std::vector<int> dev_utts(order.begin(), order.begin() + n_dev);
  std::vector<int> train_utts(order.begin() + n_dev, order.end());
  std::sort(dev_utts.begin(), dev_utts.end());
  std::sort(train_utts.begin(), train_utts.end());

  std::vector<int> all_test(test.reprs.size());
  std::iota(all_test.begin(), all_test.end(), 0);

  const FlatData tr = flatten(train, spec, train_utts);
  const FlatData dv = n_dev > 0 ? flatten(train, spec, dev_utts) : FlatData{tr};
  const FlatData te = flatten(test, spec, all_test);

  bool single_class = true;
  for (int v : tr.y) {
    if (v != tr.y[0]) {
      single_class = false;
      break;
    }
  }
  if (single_class) throw DataError("probe: training set holds a single class");

  const int d = tr.x.shape[1];
  Classifier cls = Classifier::init(d, spec.n_classes, spec.classifier == ProbeClassifier::kHidden1, rng);

  AdamState adam;
  for (TensorF* p : cls.params()) {
    adam.m.push_back(TensorF::zeros(p->shape));
    adam.v.push_back(TensorF::zeros(p->shape));
  }

  const int n_items = tr.x.shape[0];
  // Frame tasks batch whole utterances; items of one utterance stay together
  // by batching over contiguous owner runs.
  std::vector<std::pair<int, int>> utt_ranges;  // [first item, last item)
  for (int i = 0; i < n_items;) {
    int j = i;
    while (j < n_items && tr.owner[j] == tr.owner[i]) ++j;
    utt_ranges.emplace_back(i, j);
    i = j;
  }

  Classifier best = cls;
  double best_dev = -1.0;
  int best_epoch = 0;
  int64_t t = 0;
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    std::vector<int> sched(utt_ranges.size());
    std::iota(sched.begin(), sched.end(), 0);
    rng.shuffle(sched);
    for (size_t pos = 0; pos < sched.size(); pos += spec.batch_size) {
      std::vector<int> items;
      for (size_t b = pos; b < std::min(pos + spec.batch_size, sched.size()); ++b) {
        for (int i = utt_ranges[sched[b]].first; i < utt_ranges[sched[b]].second; ++i) {
          items.push_back(i);
        }
      }
      const TensorF xb = take_rows(tr.x, items);
      std::vector<int> yb(items.size());
      for (size_t i = 0; i < items.size(); ++i) yb[i] = tr.y[items[i]];

      GraphF g;
      std::vector<TensorF*> ps = cls.params();
      std::vector<int> pids;
      for (TensorF* p : ps) pids.push_back(g.leaf(*p, "probe_param", true));
      const int xn = g.constant(xb, "probe_batch");
      const int loss = g.softmax_xent(cls.logits_graph(g, xn, pids), yb);
      g.backward(loss);

      ++t;
      std::vector<TensorF> grads;
      grads.reserve(pids.size());
      for (int id : pids) grads.push_back(g.grad(id));
      adam_update(ps, grads, adam, t, spec.lr, 0.9, 0.999, 1e-8);
    }
    const double dev_acc = accuracy(cls, dv.x, dv.y, nullptr, spec.n_classes);
    // Ties go to the later epoch: the dev set can be a handful of
    // utterances whose accuracy saturates long before training settles.
    if (dev_acc >= best_dev) {
      best_dev = dev_acc;
      best = cls;
      best_epoch = epoch;
    }
  }

  ProbeReport rep;
  rep.spec = spec;
  rep.best_epoch = best_epoch;
  rep.n_train_items = n_items;
  rep.n_test_items = te.x.shape[0];
  rep.train_accuracy = accuracy(best, tr.x, tr.y, nullptr, spec.n_classes);
  rep.test_accuracy = accuracy(best, te.x, te.y, &rep.per_class, spec.n_classes);
  return rep;
}

nlohmann::json report_to_json(const ProbeReport& r) {
  nlohmann::json j;
  j["task"] = probe_task_name(r.spec.task);
  j["classifier"] = probe_classifier_name(r.spec.classifier);
  j["n_classes"] = r.spec.n_classes;
  j["lr"] = r.spec.lr;
  j["batch_size"] = r.spec.batch_size;
  j["epochs"] = r.spec.epochs;
  j["best_epoch"] = r.best_epoch;
  j["n_train_items"] = r.n_train_items;
  j["n_test_items"] = r.n_test_items;
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.test_accuracy;
  j["per_class"] = nlohmann::json::array();
  for (size_t k = 0; k < r.per_class.size(); ++k) {
    j["per_class"].push_back({{"class", k},
                              {"support", r.per_class[k].support},
                              {"correct", r.per_class[k].correct}});
  }
  return j;
}

std::string report_to_table(const ProbeReport& r) {
  char buf[256];
  std::string s;
  s += "task              classifier      classes  train acc  test acc\n";
  std::snprintf(buf, sizeof(buf), "%-17s %-15s %7d  %9.4f  %8.4f\n", probe_task_name(r.spec.task),
                probe_classifier_name(r.spec.classifier), r.spec.n_classes, r.train_accuracy,
                r.test_accuracy);
  s += buf;
  return s;
}

}  // namespace spt
