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

#include "doctest.h"
#include "taskvec/activation.hpp"
#include "taskvec/error.hpp"
#include "taskvec/model.hpp"
#include "taskvec/train.hpp"

using namespace taskvec;

TEST_CASE("bank sizes per strategy") {
  CHECK(ActivationBank::Create(ActivationStrategy::kPerCombination, 4, 8, 1).num_vectors() == 16);
  CHECK(ActivationBank::Create(ActivationStrategy::kPerTaskSum, 4, 8, 1).num_vectors() == 5);
  CHECK(ActivationBank::Create(ActivationStrategy::kPerTaskSum, 0, 8, 1).num_vectors() == 1);
  CHECK(ActivationBank::Create(ActivationStrategy::kPerCombination, 4, 8, 1).num_parameters() ==
        16 * 8);
  CHECK_THROWS_AS(ActivationBank::Create(ActivationStrategy::kPerTaskSum, 4, 0, 1), Error);
}

TEST_CASE("bank init is deterministic and small") {
  const auto a = ActivationBank::Create(ActivationStrategy::kPerCombination, 4, 64, 7);
  const auto b = ActivationBank::Create(ActivationStrategy::kPerCombination, 4, 64, 7);
  double sq = 0.0;
  int n = 0;
  for (int i = 0; i < a.num_vectors(); ++i) {
    CHECK(a.vector(i) == b.vector(i));
    sq += a.vector(i).squaredNorm();
    n += static_cast<int>(a.vector(i).size());
  }
  const double sd = std::sqrt(sq / n);
  CHECK(sd > 0.015);
  CHECK(sd < 0.025);
}

TEST_CASE("combination index") {
  CHECK(CombinationIndex(TaskSet::AsrOnly(), 4) == 0);
  CHECK(CombinationIndex(TaskSet::FromBits(0b11), 4) == 1);
  CHECK(CombinationIndex(TaskSet::FromBits(0b1011), 4) == 5);
  CHECK(CombinationIndex(TaskSet::All(), 4) == 15);
  CHECK_THROWS_AS(CombinationIndex(TaskSet::FromBits(1u << 5), 4), Error);
  for (uint32_t m = 0; m < 16; ++m) CHECK(CombinationIndex(TaskSet::FromAuxMask(m), 4) == m);
}

TEST_CASE("activation vector composition") {
  const auto sum = ActivationBank::Create(ActivationStrategy::kPerTaskSum, 4, 6, 3);
  CHECK(sum.Compose(TaskSet::AsrOnly()) == ad::RowVector(sum.vector(0).row(0)));
  const TaskSet t = TaskSet::Parse("scd,ner");
  const ad::RowVector want = sum.vector(0).row(0) + sum.vector(1).row(0) + sum.vector(3).row(0);
  CHECK((sum.Compose(t) - want).cwiseAbs().maxCoeff() == 0.0);
  // A and B overlapping only in ASR.
  const TaskSet a = TaskSet::Parse("scd"), b = TaskSet::Parse("ner,lid");
  const ad::RowVector lhs = sum.Compose(TaskSet::FromBits(a.bits() | b.bits()));
  const ad::RowVector rhs = sum.Compose(a) + sum.Compose(b) - sum.vector(0).row(0);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-15);

  const auto comb = ActivationBank::Create(ActivationStrategy::kPerCombination, 4, 6, 3);
  CHECK(comb.Compose(TaskSet::AsrOnly()) == ad::RowVector(comb.vector(0).row(0)));
  CHECK(comb.Compose(t) == ad::RowVector(comb.vector(5).row(0)));
}

TEST_CASE("apply activation") {
  ad::Matrix x = ad::Matrix::Ones(2, 2);
  ad::RowVector v(2);
  v << 1.0, -1.0;
  const ad::Matrix y = ApplyActivation(x, v);
  CHECK(y(0, 0) == 2.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(1, 0) == 2.0);
  CHECK(y(1, 1) == 0.0);
  CHECK(ApplyActivation(x, ad::RowVector::Zero(2)) == x);
  ad::RowVector v2(2);
  v2 << 0.25, 3.0;
  CHECK(ApplyActivation(ApplyActivation(x, v), v2) == ApplyActivation(x, v + v2));
  CHECK_THROWS_AS(ApplyActivation(x, ad::RowVector::Zero(3)), Error);
}

TEST_CASE("apply activation gradient is the column sum") {
  ad::Tape tape;
  ad::Matrix xm(3, 2);
  xm << 1, 2, 3, 4, 5, 6;
  ad::Var x = tape.Leaf(xm);
  ad::Var v = tape.Leaf(ad::Matrix::Zero(1, 2));
  ad::Matrix w(3, 2);
  w << 0.5, -1, 2, 0.25, -3, 1;
  ad::Var y = ApplyActivation(tape, x, v);
  ad::Var loss = tape.SumAll(tape.Mul(y, tape.Constant(w)));
  tape.Backward(loss);
  const ad::Matrix g = tape.grad(v);
  CHECK(g(0, 0) == doctest::Approx(-0.5));
  CHECK(g(0, 1) == doctest::Approx(0.25));
}

namespace {

ModelConfig TinyConfig(ActivationStrategy s, ActivationPosition p) {
  ModelConfig c;
  c.input_dim = 4;
  c.embed_dim = 5;
  c.conv_strides = {2};
  c.pred_hidden = 4;
  c.joint_dim = 5;
  c.num_symbols = 5;
  c.strategy = s;
  c.position = p;
  c.seed = 11;
  return c;
}

ad::Matrix Frames() {
  ad::Matrix x(7, 4);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = std::sin(0.7 * i);
  return x;
}

}  // namespace

TEST_CASE("gradient reaches only the selected vectors") {
  const std::vector<int> y = {1, 3};
  for (auto s : {ActivationStrategy::kPerCombination, ActivationStrategy::kPerTaskSum}) {
    for (auto p : {ActivationPosition::kAfterFeatureEncoder, ActivationPosition::kAfterFullEncoder,
                   ActivationPosition::kBoth}) {
      TransducerModel m(TinyConfig(s, p));
      const TaskSet tasks = TaskSet::Parse("scd,lid");
      const UtteranceGrad g = ComputeGradients(m, Frames(), tasks, y);
      const auto params = m.Parameters();
      int banks_seen = 0;
      for (size_t i = 0; i < params.size(); ++i) {
        const std::string &name = params[i].name;
        if (name.rfind("act.", 0) != 0) continue;
        ++banks_seen;
        const int index = std::stoi(name.substr(name.rfind('.') + 1));
        const ActivationBank &bank = name.find("feature") != std::string::npos
                                         ? m.feature_bank()
                                         : m.encoder_bank();
        const auto sel = bank.Selected(tasks);
        const bool selected = std::find(sel.begin(), sel.end(), index) != sel.end();
        CAPTURE(name);
        if (selected) {
          CHECK(g.grads[i].cwiseAbs().maxCoeff() > 0.0);
        } else {
          CHECK(g.grads[i].cwiseAbs().maxCoeff() == 0.0);
        }
      }
      const int per_bank = s == ActivationStrategy::kPerCombination ? 16 : 5;
      CHECK(banks_seen == per_bank * (p == ActivationPosition::kBoth ? 2 : 1));
    }
  }
}

TEST_CASE("conditioning flows only through the task vector") {
  TransducerModel m(TinyConfig(ActivationStrategy::kPerCombination,
                               ActivationPosition::kAfterFeatureEncoder));
  const ad::Matrix a = m.Encode(Frames(), TaskSet::AsrOnly());
  const ad::Matrix b = m.Encode(Frames(), TaskSet::All());
  CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);
  for (int i = 0; i < m.feature_bank().num_vectors(); ++i)
    m.mutable_feature_bank().mutable_vector(i).setZero();
  CHECK(m.Encode(Frames(), TaskSet::AsrOnly()) == m.Encode(Frames(), TaskSet::All()));
}
