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

#include <array>
#include <cmath>
#include <map>

#include "doctest.h"
#include "taskvec/data.hpp"
#include "taskvec/error.hpp"
#include "taskvec/io.hpp"
#include "taskvec/metrics.hpp"

using namespace taskvec;

namespace {

GenConfig Small() {
  GenConfig g;
  g.train_utterances = 200;
  g.dev_utterances = 20;
  g.test_utterances = 20;
  return g;
}

}  // namespace

TEST_CASE("generation is deterministic") {
  const Corpus a = GenerateCorpus(Small()), b = GenerateCorpus(Small());
  CHECK(a.train_full == b.train_full);
  CHECK(a.train_partial == b.train_partial);
  CHECK(a.test == b.test);
  GenConfig other = Small();
  other.seed = 2;
  CHECK_FALSE(GenerateCorpus(other).test == a.test);
}

TEST_CASE("split sizes and availability") {
  const Corpus c = GenerateCorpus(Small());
  CHECK(c.train_full.size() == 100);
  CHECK(c.train_partial.size() == 100);
  CHECK(c.dev.size() == 20);
  CHECK(c.test.size() == 20);
  for (const auto &u : c.train_partial) {
    CHECK(u.available == TaskSet::Parse("lid"));
    CHECK_FALSE(u.scd_gaps.has_value());
    CHECK_FALSE(u.ep_gaps.has_value());
    CHECK_FALSE(u.spans.has_value());
    CHECK(u.language.has_value());
  }
  for (const auto *split : {&c.train_full, &c.dev, &c.test})
    for (const auto &u : *split) {
      CHECK(u.available == TaskSet::All());
      CHECK_NOTHROW(ValidateUtterance(u));
      // Every utterance ends a turn.
      CHECK(u.ep_gaps->back() == static_cast<int>(u.words.size()));
    }
}

TEST_CASE("zero noise makes repeated words identical") {
  GenConfig g = Small();
  g.noise_sigma = 0.0;
  g.speaker_pool = 1;
  g.speakers_min = g.speakers_max = 1;
  g.frames_per_word_min = g.frames_per_word_max = 1;
  g.pause_frames_min = g.pause_frames_max = 0;
  const Corpus c = GenerateCorpus(g);
  std::map<std::pair<std::string, std::string>, std::vector<float>> seen;
  int repeats = 0;
  for (const auto &u : c.train_full) {
    REQUIRE(u.frames.rows == static_cast<int>(u.words.size()));
    for (int i = 0; i < u.frames.rows; ++i) {
      const auto row = u.frames.row(i);
      std::vector<float> v(row.begin(), row.end());
      auto [it, fresh] = seen.emplace(std::make_pair(*u.language, u.words[i]), v);
      if (!fresh) {
        ++repeats;
        CHECK(it->second == v);
      }
    }
  }
  CHECK(repeats > 0);
}

TEST_CASE("single frames are nearly always classified by the nearest word mean") {
  GenConfig g = Small();
  const GeneratorParams p = DrawGeneratorParams(g);
  const Corpus c = GenerateCorpus(g);
  // With the speaker and language offsets known, nearest-mean decoding of a
  // frame is the Bayes rule for isotropic noise.
  int total = 0, correct = 0;
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < p.words.size(); ++i) index[p.words[i]] = i;
  for (const auto &u : c.test) {
    const auto row = u.frames.row(0);  // first frame of the first word
    double best = 1e300;
    std::string arg;
    for (const auto &w : p.words) {
      for (const auto &so : p.speaker_offsets) {
        for (const auto &lo : p.language_offsets) {
          double d = 0.0;
          for (size_t k = 0; k < row.size(); ++k) {
            const double e = row[k] - (p.word_means[index[w]][k] + so[k] + lo[k]);
            d += e * e;
          }
          if (d < best) best = d, arg = w;
        }
      }
    }
    ++total;
    correct += arg == u.words[0];
  }
  CHECK(static_cast<double>(correct) / total > 0.95);
}

TEST_CASE("combination policies") {
  const Corpus c = GenerateCorpus(Small());
  Rng rng(1);
  const AnnotatedUtterance &full = c.train_full[0], &partial = c.train_partial[0];
  CHECK(SelectTaskCombination(partial, CombinationPolicy::kFromAvailableLabels, rng) ==
        TaskSet::Parse("lid"));
  CHECK(SelectTaskCombination(full, CombinationPolicy::kFromAvailableLabels, rng) == TaskSet::All());
  AnnotatedUtterance asr_only = partial;
  asr_only.available = TaskSet::AsrOnly();
  for (auto p : {CombinationPolicy::kFromAvailableLabels, CombinationPolicy::kUniformRandomSubset,
                 CombinationPolicy::kMixed})
    CHECK(SelectTaskCombination(asr_only, p, rng) == TaskSet::AsrOnly());

  std::array<int, 16> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const TaskSet t = SelectTaskCombination(full, CombinationPolicy::kUniformRandomSubset, rng);
    CHECK(t.ContainsBit(0));
    ++counts[t.aux_mask()];
  }
  double chi2 = 0.0;
  for (int k : counts) {
    // Within two percentage points of 1/16; the chi-square bound below is the
    // sharper test.
    CHECK(std::abs(static_cast<double>(k) / n - 1.0 / 16.0) < 0.02);
    chi2 += (k - n / 16.0) * (k - n / 16.0) / (n / 16.0);
  }
  CHECK(chi2 < 37.7);  // 15 degrees of freedom, p = 0.001

  for (int i = 0; i < 1000; ++i) {
    const TaskSet t = SelectTaskCombination(partial, CombinationPolicy::kMixed, rng);
    CHECK(t.IsSubsetOf(partial.available));
  }
}

TEST_CASE("batches keep per-utterance task sets and exact frames") {
  const Corpus c = GenerateCorpus(Small());
  const TokenVocab v = TokenVocab::Build(c.codec);
  std::vector<AnnotatedUtterance> pool = {c.train_full[0], c.train_partial[0], c.train_full[1]};
  const std::vector<size_t> idx = {0, 1, 2};
  Rng rng(3);
  const Batch b = MakeBatch(pool, idx, CombinationPolicy::kFromAvailableLabels, rng, v);
  REQUIRE(b.size() == 3);
  CHECK(b.tasks[0] == TaskSet::All());
  CHECK(b.tasks[1] == TaskSet::Parse("lid"));
  for (int i = 0; i < 3; ++i) {
    CHECK(b.lengths[i] == pool[i].frames.rows);
    CHECK(b.targets[i] == EncodeReference(pool[i], b.tasks[i], v));
    CHECK(b.Frames(i) == ToMatrix(pool[i].frames));
    CHECK(IttCount(b.targets[i], pool[i].available, v) == 0);
  }
  const std::vector<size_t> one = {1};
  CHECK(MakeBatch(pool, one, CombinationPolicy::kMixed, rng, v).size() == 1);
  const std::vector<size_t> bad = {7};
  CHECK_THROWS_AS(MakeBatch(pool, bad, CombinationPolicy::kMixed, rng, v), Error);
}

TEST_CASE("gen config validation and json keys") {
  GenConfig g;
  g.speakers_min = 0;
  CHECK_THROWS_AS(g.Validate(), Error);
  GenConfig parsed;
  CHECK_THROWS_AS(from_json(nlohmann::json{{"no_such_key", 1}}, parsed), Error);
  from_json(nlohmann::json{{"seed", 9}}, parsed);
  CHECK(parsed.seed == 9);
  nlohmann::json j = parsed;
  GenConfig back;
  from_json(j, back);
  CHECK(nlohmann::json(back) == j);
}
