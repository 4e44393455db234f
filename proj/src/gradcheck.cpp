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

#include "taskvec/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "taskvec/error.hpp"
#include "taskvec/train.hpp"

namespace taskvec {

GradCheckReport GradCheck(std::span<const GradCheckTensor> tensors,
                          const std::function<double()> &loss, double epsilon, double tolerance,
                          int coords, uint64_t seed) {
  if (!(epsilon > 0.0)) ThrowUsage("grad check: epsilon must be positive");
  if (coords < 1) ThrowUsage("grad check: need at least one coordinate per tensor");
  std::mt19937_64 rng(seed);
  GradCheckReport report;
  for (const GradCheckTensor &t : tensors) {
    if (t.grad->rows() != t.value->rows() || t.grad->cols() != t.value->cols())
      ThrowRuntime("grad check: gradient shape mismatch for " + t.name);
    std::vector<int64_t> idx(t.value->size());
    std::iota(idx.begin(), idx.end(), int64_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(coords)));
    std::sort(idx.begin(), idx.end());
    for (int64_t i : idx) {
      double &x = t.value->data()[i];
      const double orig = x;
      x = orig + epsilon;
      const double plus = loss();
      x = orig - epsilon;
      const double minus = loss();
      x = orig;
      GradCheckEntry e;
      e.tensor = t.name;
      e.index = i;
      e.analytic = t.grad->data()[i];
      e.numeric = (plus - minus) / (2.0 * epsilon);
      e.rel_error = std::abs(e.analytic - e.numeric) /
                    std::max(1e-8, std::abs(e.analytic) + std::abs(e.numeric));
      report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      if (!(e.rel_error < tolerance)) ++report.failures;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

GradCheckReport GradCheckModel(TransducerModel &model, const ad::Matrix &frames, TaskSet tasks,
                               std::span<const int> targets, double epsilon, double tolerance,
                               int coords, uint64_t seed) {
  const UtteranceGrad g = ComputeGradients(model, frames, tasks, targets);
  auto params = model.Parameters();
  std::vector<GradCheckTensor> tensors;
  for (size_t i = 0; i < params.size(); ++i)
    tensors.push_back({params[i].name, params[i].value, &g.grads[i]});
  return GradCheck(
      tensors, [&] { return ComputeGradients(model, frames, tasks, targets).loss; }, epsilon,
      tolerance, coords, seed);
}

}  // namespace taskvec
