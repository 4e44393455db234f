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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskvec/autodiff.hpp"
#include "taskvec/codec.hpp"

namespace taskvec {

enum class ActivationStrategy { kPerCombination, kPerTaskSum };
enum class ActivationPosition { kAfterFeatureEncoder, kAfterFullEncoder, kBoth };

std::string_view ToString(ActivationStrategy s);
std::string_view ToString(ActivationPosition p);
ActivationStrategy ParseStrategy(std::string_view s);
ActivationPosition ParsePosition(std::string_view s);

// Integer code of the auxiliary subset of `tasks` (bit k-1 <-> auxiliary task
// k). Throws if a task beyond `num_aux` is set.
uint32_t CombinationIndex(TaskSet tasks, int num_aux);

// Learnable task vectors added to acoustic embeddings.
//
// kPerCombination keeps one vector per auxiliary subset (2^K vectors) and
// picks the one indexed by CombinationIndex. kPerTaskSum keeps one vector per
// task, index 0 for the primary task and k for auxiliary task k (K + 1
// vectors), and sums the vectors of every active task, primary included.
class ActivationBank {
 public:
  // Entries are drawn i.i.d. from 0.02 * N(0, 1), deterministic in `seed`.
  static ActivationBank Create(ActivationStrategy strategy, int num_aux, int dim,
                               uint64_t seed);

  ActivationStrategy strategy() const { return strategy_; }
  int num_aux() const { return num_aux_; }
  int dim() const { return dim_; }
  int num_vectors() const { return static_cast<int>(vectors_.size()); }
  int64_t num_parameters() const { return static_cast<int64_t>(num_vectors()) * dim_; }

  // Each vector is stored as a 1 x dim matrix so it can be bound on a tape.
  const ad::Matrix &vector(int i) const { return vectors_.at(i); }
  ad::Matrix &mutable_vector(int i) { return vectors_.at(i); }

  // Indices of the vectors that compose the activation for `tasks`.
  std::vector<int> Selected(TaskSet tasks) const;

  ad::RowVector Compose(TaskSet tasks) const;
  // Same composition on a tape; `bound[i]` is the tape leaf of vector(i).
  ad::Var Compose(ad::Tape &tape, std::span<const ad::Var> bound, TaskSet tasks) const;

 private:
  ActivationStrategy strategy_ = ActivationStrategy::kPerCombination;
  int num_aux_ = 0;
  int dim_ = 0;
  std::vector<ad::Matrix> vectors_;
};

// X~[t, j] = X[t, j] + v[j].
ad::Matrix ApplyActivation(const ad::Matrix &x, const ad::RowVector &v);
ad::Var ApplyActivation(ad::Tape &tape, ad::Var x, ad::Var v);

}  // namespace taskvec
