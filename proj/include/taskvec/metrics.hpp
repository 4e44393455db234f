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

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "taskvec/codec.hpp"

namespace taskvec {

struct WerResult {
  double wer = 0.0;  // +infinity for an empty reference with a nonempty hypothesis
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t ref_length = 0;

  int64_t errors() const { return substitutions + insertions + deletions; }
};

enum class EditOp { kMatch, kSub, kDel, kIns };

struct AlignedPair {
  EditOp op;
  int ref = -1;  // index into ref, -1 for insertions
  int hyp = -1;  // index into hyp, -1 for deletions
};

// Minimal unit-cost alignment. On equal cost the backtrace prefers
// match > sub > del > ins.
template <typename T>
std::vector<AlignedPair> Align(std::span<const T> ref, std::span<const T> hyp) {
  const size_t n = ref.size();
  const size_t m = hyp.size();
  std::vector<int64_t> cost((n + 1) * (m + 1));
  auto at = [m, &cost](size_t i, size_t j) -> int64_t & { return cost[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<int64_t>(i);
  for (size_t j = 0; j <= m; ++j) at(0, j) = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const int64_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<AlignedPair> out;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        out.push_back({same ? EditOp::kMatch : EditOp::kSub, static_cast<int>(i - 1),
                       static_cast<int>(j - 1)});
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.push_back({EditOp::kDel, static_cast<int>(i - 1), -1});
      --i;
    } else {
      out.push_back({EditOp::kIns, -1, static_cast<int>(j - 1)});
      --j;
    }
  }
  std::reverse(out.begin(), out.end());
  return out;
}

template <typename T>
WerResult Wer(std::span<const T> ref, std::span<const T> hyp) {
  WerResult r;
  r.ref_length = static_cast<int64_t>(ref.size());
  for (const AlignedPair &p : Align(ref, hyp)) {
    if (p.op == EditOp::kSub) ++r.substitutions;
    if (p.op == EditOp::kIns) ++r.insertions;
    if (p.op == EditOp::kDel) ++r.deletions;
  }
  if (r.ref_length > 0) {
    r.wer = static_cast<double>(r.errors()) / static_cast<double>(r.ref_length);
  } else {
    r.wer = r.insertions == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return r;
}

WerResult Wer(std::span<const std::string> ref, std::span<const std::string> hyp);
std::vector<AlignedPair> AlignTokens(std::span<const std::string> ref,
                                     std::span<const std::string> hyp);

struct PrfCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;  // 0 when precision + recall = 0
  PrfCounts &operator+=(const PrfCounts &o);
};

// Text-based F1 for the task tokens in `task_tokens`: a true positive is an
// aligned match whose token belongs to the set.
PrfCounts TokenF1(std::span<const std::string> ref, std::span<const std::string> hyp,
                  const std::set<std::string> &task_tokens);

// Entity as (type, space-joined surface words).
using SurfaceSpan = std::pair<std::string, std::string>;
std::vector<SurfaceSpan> SurfaceSpans(const std::vector<EntitySpan> &spans,
                                      std::span<const std::string> words);
// Exact-match multiset F1.
PrfCounts NerF1(std::span<const SurfaceSpan> ref, std::span<const SurfaceSpan> hyp);

// Fraction of utterances whose first predicted language equals the reference.
// A missing prediction counts as wrong. Empty input gives 0.
double LidAccuracy(std::span<const std::string> refs,
                   std::span<const std::optional<std::string>> hyps);

// Task tokens in `hyp` whose task is not in `active`.
int64_t IttCount(std::span<const int> hyp, TaskSet active, const TokenVocab &vocab);

struct MetricReport {
  TaskSet tasks;
  int64_t utterances = 0;
  WerResult wer;
  std::map<std::string, WerResult> wer_by_language;
  std::optional<PrfCounts> scd;
  std::optional<PrfCounts> endpoint;
  std::optional<PrfCounts> ner;
  std::optional<double> lid_accuracy;
  int64_t itt = 0;
  int64_t malformed = 0;

  // Unweighted mean of the per-language WERs.
  double MacroWer() const;
  // Flat key/value pairs in a stable order; metrics of inactive tasks are
  // "--".
  std::vector<std::pair<std::string, std::string>> KeyValues() const;
  std::string ToText() const;
};

// Scores hypotheses (token ids, one per reference utterance) under `active`.
// References must carry annotations for every task in `active`.
MetricReport Evaluate(std::span<const AnnotatedUtterance> refs,
                      std::span<const std::vector<int>> hyps, TaskSet active,
                      const TokenVocab &vocab);

std::string FormatMetric(double v);

}  // namespace taskvec
