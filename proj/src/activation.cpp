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

#include "taskvec/activation.hpp"

#include <random>

#include "taskvec/error.hpp"

namespace taskvec {

std::string_view ToString(ActivationStrategy s) {
  return s == ActivationStrategy::kPerCombination ? "per_combination" : "per_task_sum";
}

std::string_view ToString(ActivationPosition p) {
  switch (p) {
    case ActivationPosition::kAfterFeatureEncoder:
      return "after_feature_encoder";
    case ActivationPosition::kAfterFullEncoder:
      return "after_full_encoder";
    case ActivationPosition::kBoth:
      return "both";
  }
  return "?";
}

ActivationStrategy ParseStrategy(std::string_view s) {
  if (s == "per_combination") return ActivationStrategy::kPerCombination;
  if (s == "per_task_sum") return ActivationStrategy::kPerTaskSum;
  ThrowUsage("unknown activation strategy: " + std::string(s));
}

ActivationPosition ParsePosition(std::string_view s) {
  if (s == "after_feature_encoder") return ActivationPosition::kAfterFeatureEncoder;
  if (s == "after_full_encoder") return ActivationPosition::kAfterFullEncoder;
  if (s == "both") return ActivationPosition::kBoth;
  ThrowUsage("unknown activation position: " + std::string(s));
}

uint32_t CombinationIndex(TaskSet tasks, int num_aux) {
  if (num_aux < 0 || num_aux > 30) ThrowUsage("auxiliary task count out of range");
  const uint32_t mask = tasks.aux_mask();
  if (mask >> num_aux) {
    ThrowUsage("task set {" + tasks.ToString() + "} uses a task id beyond K=" +
               std::to_string(num_aux));
  }
  return mask;
}

ActivationBank ActivationBank::Create(ActivationStrategy strategy, int num_aux, int dim,
                                      uint64_t seed) {
  if (dim < 1) ThrowUsage("activation dimension must be >= 1");
  if (num_aux < 0 || num_aux > 20) ThrowUsage("auxiliary task count out of range");
  ActivationBank bank;
  bank.strategy_ = strategy;
  bank.num_aux_ = num_aux;
  bank.dim_ = dim;
  const int n = strategy == ActivationStrategy::kPerCombination ? (1 << num_aux) : num_aux + 1;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  bank.vectors_.reserve(n);
  for (int i = 0; i < n; ++i) {
    ad::Matrix v(1, dim);
    for (int j = 0; j < dim; ++j) v(0, j) = 0.02 * normal(rng);
    bank.vectors_.push_back(std::move(v));
  }
  return bank;
}

std::vector<int> ActivationBank::Selected(TaskSet tasks) const {
  const uint32_t index = CombinationIndex(tasks, num_aux_);
  if (strategy_ == ActivationStrategy::kPerCombination) return {static_cast<int>(index)};
  std::vector<int> out{0};
  for (int k = 1; k <= num_aux_; ++k)
    if (tasks.ContainsBit(k)) out.push_back(k);
  return out;
}

ad::RowVector ActivationBank::Compose(TaskSet tasks) const {
  ad::RowVector v = ad::RowVector::Zero(dim_);
  for (int i : Selected(tasks)) v += vectors_[i].row(0);
  return v;
}

ad::Var ActivationBank::Compose(ad::Tape &tape, std::span<const ad::Var> bound,
                                TaskSet tasks) const {
  TASKVEC_CHECK(bound.size() == vectors_.size(), "activation bank binding size mismatch");
  const auto selected = Selected(tasks);
  ad::Var v = bound[selected[0]];
  for (size_t i = 1; i < selected.size(); ++i) v = tape.Add(v, bound[selected[i]]);
  return v;
}

ad::Matrix ApplyActivation(const ad::Matrix &x, const ad::RowVector &v) {
  if (v.size() != x.cols()) {
    ThrowRuntime("activation vector has length " + std::to_string(v.size()) +
                 " but embeddings have dimension " + std::to_string(x.cols()));
  }
  return x.rowwise() + v;
}

ad::Var ApplyActivation(ad::Tape &tape, ad::Var x, ad::Var v) {
  if (tape.value(v).cols() != tape.value(x).cols() || tape.value(v).rows() != 1)
    ThrowRuntime("activation vector does not match embedding dimension");
  return tape.AddRow(x, v);
}

}  // namespace taskvec
