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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "taskvec/error.hpp"
#include "taskvec/experiment.hpp"
#include "taskvec/io.hpp"

using namespace taskvec;
namespace fs = std::filesystem;

namespace {

fs::path TempDir(const std::string &name) {
  const fs::path p = fs::temp_directory_path() / ("taskvec_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

GenConfig Small() {
  GenConfig g;
  g.train_utterances = 40;
  g.dev_utterances = 10;
  g.test_utterances = 10;
  return g;
}

}  // namespace

TEST_CASE("corpus round trip and stable hash") {
  const fs::path a = TempDir("corpus_a"), b = TempDir("corpus_b");
  const GenConfig g = Small();
  const Corpus c = GenerateCorpus(g);
  const std::string ha = WriteCorpus(c, g, a), hb = WriteCorpus(GenerateCorpus(g), g, b);
  CHECK(ha == hb);
  CHECK(ha.size() == 16);
  const CorpusFiles back = ReadCorpus(a);
  CHECK(back.hash == ha);
  CHECK(back.corpus.train_full == c.train_full);
  CHECK(back.corpus.train_partial == c.train_partial);
  CHECK(back.corpus.dev == c.dev);
  CHECK(back.corpus.test == c.test);
  CHECK(nlohmann::json(back.gen_config) == nlohmann::json(g));
  CHECK(fs::exists(a / "frames.bin"));
  CHECK_THROWS_AS(ReadCorpus(TempDir("empty")), Error);
}

TEST_CASE("utterance json keeps absent annotations absent") {
  const Corpus c = GenerateCorpus(Small());
  const AnnotatedUtterance &u = c.train_partial[0];
  nlohmann::json j = UtteranceToJson(u);
  CHECK_FALSE(j.contains("scd_gaps"));
  CHECK_FALSE(j.contains("spans"));
  CHECK(j.contains("lang"));
  j["frames_ref"] = {{"path", "frames.bin"}, {"index", 0}};
  const std::vector<FeatureMatrix> frames = {u.frames};
  CHECK(UtteranceFromJson(j, &frames) == u);
  CHECK_THROWS_AS(UtteranceFromJson(j, nullptr), Error);
}

TEST_CASE("checkpoint round trip is exact after float rounding") {
  ModelConfig mc;
  mc.input_dim = 6;
  mc.num_symbols = 9;
  mc.strategy = ActivationStrategy::kPerTaskSum;
  mc.position = ActivationPosition::kBoth;
  TransducerModel m(mc);
  m.RoundToFloat();
  CodecConfig cc;
  cc.languages = {"en"};
  cc.lexicons["en"] = {"a"};
  const fs::path dir = TempDir("ckpt");
  SaveCheckpoint(dir / "m.ckpt", m, cc, nlohmann::json{{"k", 1}});
  const Checkpoint back = LoadCheckpoint(dir / "m.ckpt");
  CHECK(back.extra.at("k") == 1);
  CHECK(back.codec.languages == cc.languages);
  const auto pa = m.Parameters();
  const auto pb = back.model.Parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(*pa[i].value == *pb[i].value);
  }
  ad::Matrix x(9, 6);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = 0.1 * i - 2.0;
  CHECK(m.Encode(x, TaskSet::All()) == back.model.Encode(x, TaskSet::All()));

  std::ofstream(dir / "bad.ckpt") << "nope";
  CHECK_THROWS_AS(LoadCheckpoint(dir / "bad.ckpt"), Error);
}

TEST_CASE("hypothesis files") {
  const fs::path dir = TempDir("hyp");
  const std::vector<HypothesisLine> lines = {{"u1", {"<lid:en>", "a", "b"}}, {"u2", {}}};
  WriteHypotheses(dir / "h.txt", lines);
  const auto back = ReadHypotheses(dir / "h.txt");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "u1");
  CHECK(back[0].tokens == lines[0].tokens);
  CHECK(back[1].tokens.empty());
  std::ofstream(dir / "empty.txt").close();
  CHECK_THROWS_AS(ReadHypotheses(dir / "empty.txt"), Error);
  std::ofstream(dir / "notab.txt") << "u1 a b\n";
  CHECK_THROWS_AS(ReadHypotheses(dir / "notab.txt"), Error);
}

TEST_CASE("perfect hypotheses score perfectly") {
  const Corpus c = GenerateCorpus(Small());
  const TokenVocab v = TokenVocab::Build(c.codec);
  std::vector<HypothesisLine> hyps;
  for (const auto &u : c.test) {
    HypothesisLine h{u.id, {}};
    for (int id : EncodeReference(u, TaskSet::All(), v)) h.tokens.push_back(v.ToString(id));
    hyps.push_back(h);
  }
  const MetricReport r = EvaluateHypotheses(hyps, c.test, TaskSet::All(), v);
  CHECK(r.wer.wer == 0.0);
  CHECK(r.scd->fp + r.scd->fn == 0);
  CHECK(r.endpoint->f1() == 1.0);
  CHECK(r.ner->f1() == 1.0);
  CHECK(*r.lid_accuracy == 1.0);
  CHECK(r.itt == 0);
  hyps.pop_back();
  CHECK_THROWS_AS(EvaluateHypotheses(hyps, c.test, TaskSet::All(), v), Error);
}
