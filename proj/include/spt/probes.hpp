// Copyright 2026 the spt authors
//
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spt/tensor.hpp"

#include <json.hpp>

namespace spt {

enum class ProbeTask { kPhoneFrame, kSpeakerFrame, kSpeakerUtterance };
enum class ProbeClassifier { kLinear, kHidden1, kConcat8Linear };

const char* probe_task_name(ProbeTask t);
ProbeTask probe_task_from_name(const std::string& name);
const char* probe_classifier_name(ProbeClassifier c);
ProbeClassifier probe_classifier_from_name(const std::string& name);

struct ProbeSpec {
  ProbeTask task = ProbeTask::kPhoneFrame;
  ProbeClassifier classifier = ProbeClassifier::kLinear;
  int n_classes = 2;
  double lr = 4e-3;
  int batch_size = 6;
  int epochs = 10;

  bool frame_level() const { return task != ProbeTask::kSpeakerUtterance; }
  void validate() const;
};

struct ClassCount {
  int64_t support = 0;
  int64_t correct = 0;
};

struct ProbeReport {
  ProbeSpec spec;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int64_t n_train_items = 0;
  int64_t n_test_items = 0;
  int best_epoch = 0;
  std::vector<ClassCount> per_class;  // test-set support/correct per class
};

nlohmann::json report_to_json(const ProbeReport& r);
std::string report_to_table(const ProbeReport& r);

// Mean over frames, [L, d] -> [d].
TensorF utterance_pool(const TensorF& repr);

// Frame t maps to the concatenation of frames t-k/2 .. t+k/2-1 with edge
// replication; [L, d] -> [L, k*d].
TensorF concat_windows(const TensorF& repr, int k = 8);

struct LabeledUtterances {
  std::vector<TensorF> reprs;                  // [L_i, d] each
  std::vector<std::vector<int>> frame_labels;  // frame tasks: one label per frame
  std::vector<int> utt_labels;                 // utterance task: one label per utterance
};

// Supervised probe on fixed representations. A seeded dev carve-out from the
// training utterances picks the best epoch; the report holds that epoch's
// test accuracy.
ProbeReport train_probe(const LabeledUtterances& train, const LabeledUtterances& test,
                        const ProbeSpec& spec, uint64_t seed);

}  // namespace spt
