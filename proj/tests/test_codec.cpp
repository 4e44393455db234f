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

#include <random>
#include <set>

#include "doctest.h"
#include "taskvec/codec.hpp"
#include "taskvec/data.hpp"
#include "taskvec/error.hpp"

using namespace taskvec;

namespace {

CodecConfig SmallCodec() {
  CodecConfig c;
  c.languages = {"en"};
  c.entity_types = {"PER"};
  c.lexicons["en"] = {"a", "b"};
  return c;
}

AnnotatedUtterance TwoWordUtt() {
  AnnotatedUtterance u;
  u.id = "u";
  u.words = {"a", "b"};
  u.language = "en";
  u.scd_gaps = std::vector<int>{1};
  u.ep_gaps = std::vector<int>{2};
  u.spans = std::vector<EntitySpan>{{"PER", 0, 1}};
  u.available = TaskSet::All();
  return u;
}

std::vector<std::string> Strings(const std::vector<int> &ids, const TokenVocab &v) {
  std::vector<std::string> out;
  for (int id : ids) out.push_back(v.ToString(id));
  return out;
}

}  // namespace

TEST_CASE("vocab size for one language and one entity type") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  CHECK(v.size() == 8);
  CHECK(v.blank_id() == 7);
  CHECK(v.num_words() == 2);
  CHECK(v.Kind(v.blank_id()) == TokenKind::kBlank);
  CHECK(v.TaskOf(v.scd_id()) == TaskId::kScd);
  CHECK(v.TaskOf(v.ep_id()) == TaskId::kEndpoint);
  CHECK(v.TaskOf(v.NeOpenId("PER")) == TaskId::kNer);
  CHECK(v.TaskOf(v.ne_close_id()) == TaskId::kNer);
  CHECK(v.TaskOf(v.LidId("en")) == TaskId::kLid);
  CHECK_FALSE(v.TaskOf(0).has_value());
}

TEST_CASE("vocab partition is total and specials never collide with words") {
  CodecConfig c;
  c.languages = {"de", "en"};
  c.entity_types = {"LOC", "PER"};
  c.lexicons["de"] = {"ja", "ok"};
  c.lexicons["en"] = {"ok", "yes"};
  const TokenVocab v = TokenVocab::Build(c);
  CHECK(v.num_words() == 3);  // "ok" shared
  int words = 0, blanks = 0, tasks = 0;
  for (int id = 0; id < v.size(); ++id) {
    switch (v.Kind(id)) {
      case TokenKind::kWord: ++words; CHECK(v.IsWord(id)); break;
      case TokenKind::kBlank: ++blanks; break;
      case TokenKind::kTask: ++tasks; CHECK(v.TaskOf(id).has_value()); break;
    }
  }
  CHECK(words == 3);
  CHECK(blanks == 1);
  CHECK(tasks == 2 + 2 + 1 + 2);
}

TEST_CASE("vocab errors") {
  CodecConfig none;
  CHECK_THROWS_AS(TokenVocab::Build(none), Error);
  CodecConfig dup = SmallCodec();
  dup.entity_types = {"PER", "PER"};
  CHECK_THROWS_AS(TokenVocab::Build(dup), Error);
}

TEST_CASE("task set parsing and canonical form") {
  CHECK(TaskSet::Parse("asr") == TaskSet::AsrOnly());
  CHECK(TaskSet::Parse("") == TaskSet::AsrOnly());
  CHECK(TaskSet::Parse("lid,scd").ToString() == "asr,scd,lid");
  CHECK(TaskSet::Parse("scd,endpoint,ner,lid") == TaskSet::All());
  CHECK_THROWS_AS(TaskSet::Parse("foo"), Error);
  CHECK_THROWS_AS(TaskSet::FromBits(0), Error);
  CHECK(TaskSet::FromBits(1) == TaskSet::AsrOnly());
}

TEST_CASE("encode reference examples") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  AnnotatedUtterance u = TwoWordUtt();
  CHECK(Strings(EncodeReference(u, TaskSet::AsrOnly(), v), v) ==
        std::vector<std::string>{"a", "b"});
  CHECK(Strings(EncodeReference(u, TaskSet::Parse("lid"), v), v) ==
        std::vector<std::string>{"<lid:en>", "a", "b"});
  CHECK(Strings(EncodeReference(u, TaskSet::All(), v), v) ==
        std::vector<std::string>{"<lid:en>", "<ne:PER>", "a", "</ne>", "<scd>", "b", "<ep>"});
}

TEST_CASE("shared gap orders ner close, scd, ep") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  AnnotatedUtterance u = TwoWordUtt();
  u.ep_gaps = std::vector<int>{1, 2};
  CHECK(Strings(EncodeReference(u, TaskSet::All(), v), v) ==
        std::vector<std::string>{"<lid:en>", "<ne:PER>", "a", "</ne>", "<scd>", "<ep>", "b",
                                 "<ep>"});
}

TEST_CASE("encode rejects tasks without annotations") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  AnnotatedUtterance u = TwoWordUtt();
  u.available = TaskSet::Parse("lid");
  u.scd_gaps.reset();
  u.ep_gaps.reset();
  u.spans.reset();
  CHECK_THROWS_AS(EncodeReference(u, TaskSet::Parse("scd"), v), Error);
}

TEST_CASE("parse hypothesis examples") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  const std::vector<std::string> toks = {"<lid:en>", "a", "b"};
  TaskPredictions p = ParseHypothesis(TokenIds(toks, v), v);
  CHECK(p.words == std::vector<std::string>{"a", "b"});
  CHECK(p.language == "en");
  CHECK(p.malformed == 0);

  const std::vector<std::string> open = {"<ne:PER>", "a"};
  p = ParseHypothesis(TokenIds(open, v), v);
  CHECK(p.words == std::vector<std::string>{"a"});
  CHECK(p.spans.empty());
  CHECK(p.malformed == 1);

  const std::vector<std::string> close = {"a", "</ne>"};
  CHECK(ParseHypothesis(TokenIds(close, v), v).malformed == 1);
}

TEST_CASE("parse is total on arbitrary id sequences") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> id(-2, v.size() + 2), len(0, 12);
  for (int i = 0; i < 2000; ++i) {
    std::vector<int> ids(len(rng));
    for (int &x : ids) x = id(rng);
    CHECK_NOTHROW(ParseHypothesis(ids, v));
  }
}

TEST_CASE("strip task tokens") {
  const TokenVocab v = TokenVocab::Build(SmallCodec());
  const std::vector<std::string> toks = {"<lid:en>", "a", "<scd>", "b", "<ep>"};
  CHECK(Strings(StripTaskTokens(TokenIds(toks, v), v), v) == std::vector<std::string>{"a", "b"});
  CHECK(StripTaskTokens(std::vector<int>{}, v).empty());
}

TEST_CASE("round trip over generated utterances and every subset") {
  GenConfig g;
  g.train_utterances = 60;
  g.dev_utterances = 20;
  g.test_utterances = 20;
  const Corpus c = GenerateCorpus(g);
  const TokenVocab v = TokenVocab::Build(c.codec);
  for (const auto *split : {&c.train_full, &c.dev, &c.test}) {
    for (const AnnotatedUtterance &u : *split) {
      for (uint32_t m = 0; m < 16; ++m) {
        const TaskSet active = TaskSet::FromAuxMask(m);
        const auto ids = EncodeReference(u, active, v);
        const TaskPredictions p = ParseHypothesis(ids, v);
        CHECK(p == RestrictAnnotations(u, active));
        CHECK(p.malformed == 0);
        for (int id : ids) {
          const auto t = v.TaskOf(id);
          if (t) CHECK(active.Contains(*t));
        }
        CHECK(Strings(StripTaskTokens(ids, v), v) == u.words);
      }
    }
  }
}
