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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "taskvec/codec.hpp"
#include "taskvec/metrics.hpp"

using namespace taskvec;

using Words = std::vector<std::string>;

namespace {

// Plain edit distance, independent of the aligner.
int64_t EditDistance(const Words &a, const Words &b) {
  std::vector<std::vector<int64_t>> d(a.size() + 1, std::vector<int64_t>(b.size() + 1));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

}  // namespace

TEST_CASE("wer fixtures") {
  WerResult w = Wer(Words{"a", "b", "c"}, Words{"a", "b", "c"});
  CHECK(w.wer == 0.0);
  w = Wer(Words{"a", "b", "c"}, Words{"a", "x", "c", "d"});
  CHECK(w.substitutions == 1);
  CHECK(w.insertions == 1);
  CHECK(w.deletions == 0);
  CHECK(w.wer == 2.0 / 3.0);
  w = Wer(Words{"a"}, Words{});
  CHECK(w.deletions == 1);
  CHECK(w.wer == 1.0);
  CHECK(Wer(Words{}, Words{}).wer == 0.0);
  CHECK(std::isinf(Wer(Words{}, Words{"a"}).wer));
}

TEST_CASE("wer swaps insertions and deletions") {
  const Words a = {"a", "b", "c", "d"}, b = {"b", "x", "d", "e", "f"};
  const WerResult ab = Wer(a, b), ba = Wer(b, a);
  CHECK(ab.insertions == ba.deletions);
  CHECK(ab.deletions == ba.insertions);
  CHECK(ab.substitutions == ba.substitutions);
}

TEST_CASE("alignment") {
  const Words a = {"a", "b", "c"};
  for (const auto &p : AlignTokens(a, a)) CHECK(p.op == EditOp::kMatch);
  const auto ins = AlignTokens(a, Words{"a", "b", "z", "c"});
  int n_ins = 0;
  for (const auto &p : ins) n_ins += p.op == EditOp::kIns;
  CHECK(n_ins == 1);
  const std::vector<Words> seqs = {{}, {"a"}, {"a", "b"}, {"b", "a", "c"}, {"c", "c", "a", "b"},
                                   {"x", "y", "z", "a", "b"}};
  for (const Words &r : seqs) {
    for (const Words &h : seqs) {
      int64_t cost = 0;
      for (const auto &p : AlignTokens(r, h)) cost += p.op != EditOp::kMatch;
      CHECK(cost == EditDistance(r, h));
    }
  }
}

TEST_CASE("token f1 fixtures") {
  const std::set<std::string> scd = {"<scd>"};
  const Words ref = {"a", "<scd>", "b", "<scd>", "c"};
  PrfCounts c = TokenF1(ref, ref, scd);
  CHECK(c.f1() == 1.0);
  c = TokenF1(ref, Words{"a", "<scd>", "b", "c", "<scd>"}, scd);
  CHECK(c.precision() == 0.5);
  CHECK(c.recall() == 0.5);
  CHECK(c.f1() == 0.5);
  CHECK(TokenF1(ref, Words{"a", "b", "c"}, scd).f1() == 0.0);
  // Word errors that leave the task tokens aligned do not matter.
  CHECK(TokenF1(ref, Words{"q", "<scd>", "b", "<scd>", "r"}, scd).f1() == 1.0);
}

TEST_CASE("ner exact-match fixtures") {
  using S = std::vector<SurfaceSpan>;
  CHECK(NerF1(S{{"PER", "john smith"}}, S{{"PER", "john smith"}}).f1() == 1.0);
  CHECK(NerF1(S{{"PER", "john smith"}}, S{{"PER", "john"}}).f1() == 0.0);
  const PrfCounts c = NerF1(S{{"PER", "a"}, {"LOC", "b"}}, S{{"PER", "a"}, {"PER", "b"}});
  CHECK(c.tp == 1);
  CHECK(c.precision() == 0.5);
  CHECK(c.recall() == 0.5);
  CHECK(c.f1() == 0.5);
  // Multiset: a duplicated hypothesis span matches only once.
  CHECK(NerF1(S{{"PER", "a"}}, S{{"PER", "a"}, {"PER", "a"}}).fp == 1);
}

TEST_CASE("lid accuracy") {
  const Words refs = {"en", "de", "en", "de", "en", "de", "en", "de", "en", "de"};
  std::vector<std::optional<std::string>> hyps(refs.begin(), refs.end());
  CHECK(LidAccuracy(refs, hyps) == 1.0);
  for (int i = 0; i < 5; ++i) hyps[i] = (i % 2) ? std::optional<std::string>() : std::optional<std::string>("xx");
  CHECK(LidAccuracy(refs, hyps) == 0.5);
  const std::vector<std::optional<std::string>> missing = {std::nullopt};
  CHECK(LidAccuracy(Words{"en"}, missing) == 0.0);
}

TEST_CASE("itt count and evaluation report") {
  CodecConfig cc;
  cc.languages = {"en"};
  cc.entity_types = {"PER"};
  cc.lexicons["en"] = {"a", "b"};
  const TokenVocab v = TokenVocab::Build(cc);
  const std::vector<std::string> hyp_toks = {"a", "<scd>", "b"};
  const auto hyp = TokenIds(hyp_toks, v);
  CHECK(IttCount(hyp, TaskSet::AsrOnly(), v) == 1);
  CHECK(IttCount(hyp, TaskSet::All(), v) == 0);

  AnnotatedUtterance u;
  u.id = "u";
  u.words = {"a", "b"};
  u.language = "en";
  u.scd_gaps = std::vector<int>{1};
  u.ep_gaps = std::vector<int>{2};
  u.spans = std::vector<EntitySpan>{};
  u.available = TaskSet::All();
  const std::vector<AnnotatedUtterance> refs = {u};
  const std::vector<std::vector<int>> hyps = {hyp};
  const MetricReport asr = Evaluate(refs, hyps, TaskSet::AsrOnly(), v);
  CHECK(asr.itt == 1);
  CHECK(asr.wer.wer == 0.0);
  CHECK_FALSE(asr.scd.has_value());
  const auto kv = asr.KeyValues();
  for (const auto &[k, val] : kv)
    if (k == "scd.f1" || k == "ner.f1" || k == "lid.accuracy" || k == "endpoint.f1")
      CHECK(val == "--");
  const MetricReport all = Evaluate(refs, hyps, TaskSet::All(), v);
  CHECK(all.scd->f1() == 1.0);
  CHECK(all.endpoint->f1() == 0.0);
  CHECK(*all.lid_accuracy == 0.0);
  // Key order is fixed regardless of content.
  std::vector<std::string> k1, k2;
  for (const auto &[k, val] : all.KeyValues()) k1.push_back(k);
  for (const auto &[k, val] : Evaluate(refs, std::vector<std::vector<int>>{{}}, TaskSet::All(), v).KeyValues())
    k2.push_back(k);
  CHECK(k1 == k2);
}
