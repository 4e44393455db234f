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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "taskvec/autodiff.hpp"
#include "taskvec/codec.hpp"
#include "taskvec/model.hpp"

namespace taskvec {

struct GradCheckEntry {
  std::string tensor;
  int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;  // |a - f| / max(1e-8, |a| + |f|)
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  int failures = 0;  // entries with rel_error >= tolerance
  bool passed() const { return failures == 0 && !entries.empty(); }
};

struct GradCheckTensor {
  std::string name;
  ad::Matrix *value;
  const ad::Matrix *grad;  // analytic gradient, same shape
};

// Central differences on up to `coords` coordinates per tensor (all of them
// when the tensor is smaller), sampled without replacement from `seed`.
// `loss` is re-evaluated after each perturbation; values are restored.
GradCheckReport GradCheck(std::span<const GradCheckTensor> tensors,
                          const std::function<double()> &loss, double epsilon, double tolerance,
                          int coords, uint64_t seed);

// Checks every parameter tensor of `model` on the transducer loss of one
// utterance decoded with `tasks` active.
GradCheckReport GradCheckModel(TransducerModel &model, const ad::Matrix &frames, TaskSet tasks,
                               std::span<const int> targets, double epsilon = 1e-5,
                               double tolerance = 1e-4, int coords = 10, uint64_t seed = 1);

}  // namespace taskvec
