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

#include <chrono>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "taskvec/error.hpp"
#include "taskvec/io.hpp"
#include "taskvec/train.hpp"

using namespace taskvec;
namespace fs = std::filesystem;

namespace {

CorpusFiles SmallCorpus(int train = 20) {
  GenConfig g;
  g.train_utterances = train;
  g.dev_utterances = 6;
  g.test_utterances = 6;
  CorpusFiles cf;
  cf.corpus = GenerateCorpus(g);
  cf.gen_config = g;
  cf.hash = "test";
  return cf;
}

TrainConfig Fast() {
  TrainConfig c;
  c.embed_dim = 16;
  c.pred_hidden = 16;
  c.joint_dim = 16;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  c.lr = 1e-3;
  c.warmup_steps = 10;
  CHECK(LearningRate(c, 1) == doctest::Approx(1e-4));
  CHECK(LearningRate(c, 10) == doctest::Approx(1e-3));
  CHECK(LearningRate(c, 40) == doctest::Approx(5e-4));
}

TEST_CASE("best epoch is the earliest minimum dev wer") {
  std::vector<EpochRecord> e(4);
  for (int i = 0; i < 4; ++i) e[i].epoch = i + 1;
  e[0].dev_wer = 0.5;
  e[1].dev_wer = 0.2;
  e[3].dev_wer = 0.2;
  CHECK(SelectBestEpoch(e) == 1);
  std::vector<EpochRecord> none(2);
  CHECK(SelectBestEpoch(none) == -1);
}

TEST_CASE("config validation and json") {
  TrainConfig c;
  c.epochs = 0;
  CHECK_THROWS_AS(c.Validate(), Error);
  c = TrainConfig();
  c.lr = 0.0;
  CHECK_THROWS_AS(c.Validate(), Error);
  TrainConfig d;
  CHECK_THROWS_AS(from_json(nlohmann::json{{"bogus", 1}}, d), Error);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"policy", "bogus"}}, d), Error);
  from_json(nlohmann::json{{"policy", "uniform_random_subset"}, {"strategy", "per_task_sum"}}, d);
  CHECK(d.policy == CombinationPolicy::kUniformRandomSubset);
  CHECK(d.strategy == ActivationStrategy::kPerTaskSum);
  CHECK(d.beta1 == 0.9);
  CHECK(d.beta2 == 0.98);
  CHECK(d.adam_eps == 1e-9);
}

TEST_CASE("one epoch on ten utterances is quick") {
  const CorpusFiles cf = SmallCorpus(20);
  TrainConfig c = Fast();
  c.epochs = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = Train(c, cf, {});
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(s < 60.0);
  CHECK(r.manifest.epochs.size() == 1);
  CHECK(std::isfinite(r.manifest.epochs[0].train_loss));
}

TEST_CASE("training is deterministic and audits partial targets") {
  const CorpusFiles cf = SmallCorpus(24);
  TrainConfig c = Fast();
  c.epochs = 2;
  const fs::path dir = fs::temp_directory_path() / "taskvec_test_train";
  fs::remove_all(dir);
  const TrainResult a = Train(c, cf, dir);
  const TrainResult b = Train(c, cf, {});
  REQUIRE(a.manifest.epochs.size() == 2);
  for (int i = 0; i < 2; ++i) CHECK(a.manifest.epochs[i].train_loss == b.manifest.epochs[i].train_loss);
  const auto pa = a.best_model.Parameters();
  const auto pb = b.best_model.Parameters();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].value == *pb[i].value);
  CHECK(a.manifest.unavailable_task_tokens == 0);
  CHECK(fs::exists(dir / "best.ckpt"));
  CHECK(fs::exists(dir / "run.json"));
  const nlohmann::json run = ReadJsonFile(dir / "run.json");
  CHECK(run.at("best_epoch") == a.manifest.best_epoch);
  CHECK(run.at("corpus_hash") == "test");
  CHECK(run.at("epochs").size() == 2);
  // Resuming from the checkpoint reproduces the forward pass exactly.
  const Checkpoint ck = LoadCheckpoint(dir / "best.ckpt");
  const ad::Matrix x = ToMatrix(cf.corpus.test[0].frames);
  CHECK(ck.model.Encode(x, TaskSet::All()) == a.best_model.Encode(x, TaskSet::All()));
}

TEST_CASE("batched gradients equal the sum of per-utterance gradients") {
  const CorpusFiles cf = SmallCorpus(8);
  TrainConfig c = Fast();
  const TokenVocab v = TokenVocab::Build(cf.corpus.codec);
  TransducerModel m(c.MakeModelConfig(v.num_symbols(), cf.corpus.train_full[0].frames.cols));
  const std::vector<size_t> idx = {0, 1, 2};
  Rng rng(1);
  const Batch b = MakeBatch(cf.corpus.train_full, idx, CombinationPolicy::kFromAvailableLabels, rng, v);
  double batched = 0.0;
  for (int i = 0; i < b.size(); ++i)
    batched += ComputeGradients(m, b.Frames(i), b.tasks[i], b.targets[i]).loss;
  double individual = 0.0;
  for (size_t i : idx) {
    const auto &u = cf.corpus.train_full[i];
    individual += ComputeGradients(m, ToMatrix(u.frames), TaskSet::All(),
                                   EncodeReference(u, TaskSet::All(), v)).loss;
  }
  CHECK(std::abs(batched - individual) < 1e-6);
}

TEST_CASE("non-finite loss aborts with a numeric error") {
  CorpusFiles cf = SmallCorpus(8);
  cf.corpus.train_full[0].frames.data[0] = std::nanf("");
  TrainConfig c = Fast();
  c.epochs = 1;
  c.use_partial = false;
  try {
    Train(c, cf, {});
    FAIL("expected a numeric error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kNumeric);
  }
}

TEST_CASE("loss drops within five epochs on the default corpus") {
  CorpusFiles cf;
  cf.gen_config = GenConfig();
  cf.corpus = GenerateCorpus(cf.gen_config);
  TrainConfig c;
  c.epochs = 5;
  c.eval_every = 5;
  const TrainResult r = Train(c, cf, {});
  CHECK(r.manifest.epochs[4].train_loss < r.manifest.epochs[0].train_loss);
}
