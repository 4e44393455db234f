// Copyright 2026 The taskvec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "taskvec/data.hpp"
#include "taskvec/io.hpp"
#include "taskvec/metrics.hpp"
#include "taskvec/model.hpp"

namespace taskvec {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double lr = 3e-3;
  int warmup_steps = 100;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double adam_eps = 1e-9;
  double clip_norm = 5.0;  // global gradient norm; <= 0 disables clipping
  uint64_t seed = 1;
  CombinationPolicy policy = CombinationPolicy::kMixed;
  double uniform_fraction = 0.5;  // only read by the mixed policy
  ActivationStrategy strategy = ActivationStrategy::kPerCombination;
  ActivationPosition position = ActivationPosition::kAfterFeatureEncoder;
  // Model sizes.
  int embed_dim = 64;
  std::vector<int> conv_strides = {2, 1};
  int conv_kernel = 3;
  int context_layers = 2;
  int pred_hidden = 64;
  int pred_context = 2;
  int joint_dim = 64;
  double dropout = 0.0;
  // Whether the train-partial split takes part, and how many partial
  // utterances are mixed in per full utterance each epoch (drawn without
  // replacement, cycling through the split).
  bool use_partial = true;
  double partial_ratio = 1.0;
  int eval_every = 1;  // dev evaluation cadence in epochs
  int max_symbols_per_frame = 8;
  int threads = 0;  // 0: hardware concurrency

  void Validate() const;
  ModelConfig MakeModelConfig(int num_symbols, int input_dim) const;
};

void to_json(nlohmann::json &j, const TrainConfig &c);
// Missing keys keep their defaults; unknown keys are a usage error.
void from_json(const nlohmann::json &j, TrainConfig &c);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-utterance loss
  std::optional<double> dev_wer;
  std::optional<double> dev_scd_f1, dev_endpoint_f1;
  double seconds = 0.0;
};

struct RunManifest {
  TrainConfig config;
  std::string corpus_hash;
  std::string revision;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_wer = 0.0;
  int64_t num_parameters = 0;
  // Targets built from train-partial utterances that contained a token of a
  // task the utterance is not annotated for. Always 0.
  int64_t unavailable_task_tokens = 0;
};

void to_json(nlohmann::json &j, const RunManifest &m);

// Index of the minimum dev WER; ties go to the earliest epoch. Epochs without
// a dev evaluation are skipped.
int SelectBestEpoch(std::span<const EpochRecord> epochs);

// Linear warmup to lr over warmup_steps, then lr * sqrt(warmup / step).
double LearningRate(const TrainConfig &c, int64_t step);

class AdamOptimizer {
 public:
  AdamOptimizer(const TrainConfig &c, TransducerModel &model);
  // Applies one update with the given gradients (aligned with Parameters()).
  void Step(const std::vector<ad::Matrix> &grads);
  int64_t steps() const { return step_; }

 private:
  TrainConfig config_;
  TransducerModel &model_;
  std::vector<ad::Matrix> m_, v_;
  int64_t step_ = 0;
};

// Loss and parameter gradients for one utterance.
struct UtteranceGrad {
  double loss = 0.0;
  std::vector<ad::Matrix> grads;
};
UtteranceGrad ComputeGradients(const TransducerModel &model, const ad::Matrix &frames,
                               TaskSet tasks, std::span<const int> targets,
                               double dropout = 0.0, uint64_t dropout_seed = 0);

// Decodes every utterance with `tasks` active. beam <= 1 uses greedy search.
std::vector<std::vector<int>> DecodeUtterances(const TransducerModel &model,
                                               std::span<const AnnotatedUtterance> utts,
                                               TaskSet tasks, int beam, int max_symbols_per_frame,
                                               int threads = 0);

struct TrainResult {
  RunManifest manifest;
  TransducerModel best_model;  // parameters rounded to float32
};

using TrainLogger = std::function<void(const std::string &)>;

// Trains on the corpus and selects the epoch with the lowest macro dev WER
// (all tasks active, greedy search). When `out_dir` is non-empty, writes
// best.ckpt and run.json there. Throws a numeric error on a non-finite loss.
TrainResult Train(const TrainConfig &config, const CorpusFiles &corpus,
                  const std::filesystem::path &out_dir, const TrainLogger &log = {});

int ResolveThreads(int requested, int work_items);

}  // namespace taskvec
