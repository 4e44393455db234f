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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "taskvec/io.hpp"
#include "taskvec/metrics.hpp"
#include "taskvec/train.hpp"

namespace taskvec {

// Hypothesis file: one line per utterance, "id<TAB>space-joined tokens".
struct HypothesisLine {
  std::string id;
  std::vector<std::string> tokens;
};

void WriteHypotheses(const std::filesystem::path &path, const std::vector<HypothesisLine> &lines);
// Empty files and lines without a tab are runtime errors.
std::vector<HypothesisLine> ReadHypotheses(const std::filesystem::path &path);

// Config files are JSON objects; a missing file is a usage error. An empty path
// yields the defaults.
GenConfig LoadGenConfig(const std::filesystem::path &path);
TrainConfig LoadTrainConfig(const std::filesystem::path &path);

// Decodes `split` with `tasks` active. Tasks the model has no vector for are
// a usage error.
std::vector<HypothesisLine> DecodeSplit(const TransducerModel &model, const TokenVocab &vocab,
                                        const std::vector<AnnotatedUtterance> &utts, TaskSet tasks,
                                        int beam, int threads = 0);

// Scores hypotheses against `utts`, matched by id. Every reference must have
// exactly one hypothesis.
MetricReport EvaluateHypotheses(const std::vector<HypothesisLine> &hyps,
                                const std::vector<AnnotatedUtterance> &utts, TaskSet tasks,
                                const TokenVocab &vocab);

// Writes report.txt and metrics.txt (flat key=value, stable key order).
void WriteReport(const MetricReport &report, const std::filesystem::path &dir);
std::string FormatKeyValues(const MetricReport &report);

// Ablation over strategy x position. Config file keys (all optional):
//   "train"      TrainConfig object shared by every run
//   "beam"       beam size for the test evaluations (default 4)
//   "split"      evaluation split (default "test")
//   "strategies" list of strategy names (default both)
//   "positions"  list of position names (default all three)
struct AblationConfig {
  TrainConfig train;
  int beam = 4;
  Split split = Split::kTest;
  std::vector<ActivationStrategy> strategies = {ActivationStrategy::kPerCombination,
                                                ActivationStrategy::kPerTaskSum};
  std::vector<ActivationPosition> positions = {ActivationPosition::kAfterFeatureEncoder,
                                               ActivationPosition::kAfterFullEncoder,
                                               ActivationPosition::kBoth};
};
AblationConfig LoadAblationConfig(const std::filesystem::path &path);

struct AblationRun {
  ActivationStrategy strategy;
  ActivationPosition position;
  std::string dir;  // relative to the ablation output directory
  double best_dev_wer = 0.0;
  int best_epoch = 0;
  MetricReport all_tasks;  // evaluation split, every task active
};

struct AblationSubset {
  ActivationStrategy strategy;
  ActivationPosition position;
  MetricReport report;
};

struct AblationResult {
  std::vector<AblationRun> runs;        // grid order
  std::vector<AblationSubset> subsets;  // per strategy, 2^K rows
  std::string table1;                   // strategy x position, all tasks active
  std::string table3;                   // activation subsets per strategy
};

// Run directory name, e.g. "per_combination__after_feature_encoder".
std::string RunName(ActivationStrategy s, ActivationPosition p);

// Lists the runs an ablation would perform, one per line.
std::string PlanAblation(const AblationConfig &config);

// Trains every grid point into out_dir/<run>, picks the position with the
// lowest dev WER per strategy, and evaluates it with all 2^K subsets. Writes
// table1.txt, table3.txt and ablation.json into out_dir.
AblationResult RunAblation(const AblationConfig &config, const CorpusFiles &corpus,
                           const std::filesystem::path &out_dir, const TrainLogger &log = {});

std::string FormatTable1(const std::vector<AblationRun> &runs);
std::string FormatTable3(const std::vector<AblationSubset> &subsets);

}  // namespace taskvec
