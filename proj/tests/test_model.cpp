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
#include <random>

#include "doctest.h"
#include "taskvec/error.hpp"
#include "taskvec/gradcheck.hpp"
#include "taskvec/model.hpp"
#include "taskvec/train.hpp"
#include "taskvec/transducer.hpp"

using namespace taskvec;

namespace {

TransducerLattice RandomLattice(std::mt19937_64 &rng, int T, int U, int V) {
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_int_distribution<int> sym(0, V - 1);
  std::vector<int> y(U);
  for (int &s : y) s = sym(rng);
  TransducerLattice l;
  l.log_blank.resize(T, U + 1);
  l.log_emit.resize(T, U);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      std::vector<double> logits(V + 1);
      for (double &x : logits) x = n(rng);
      double m = logits[0];
      for (double x : logits) m = std::max(m, x);
      double z = 0.0;
      for (double x : logits) z += std::exp(x - m);
      const double lse = m + std::log(z);
      l.log_blank(t, u) = logits[V] - lse;
      if (u < U) l.log_emit(t, u) = logits[y[u]] - lse;
    }
  }
  return l;
}

ModelConfig Tiny(ActivationStrategy s = ActivationStrategy::kPerCombination,
                 ActivationPosition p = ActivationPosition::kAfterFeatureEncoder) {
  ModelConfig c;
  c.input_dim = 5;
  c.embed_dim = 6;
  c.conv_strides = {2, 1};
  c.pred_hidden = 4;
  c.joint_dim = 5;
  c.num_symbols = 6;
  c.strategy = s;
  c.position = p;
  c.seed = 3;
  return c;
}

ad::Matrix RandomFrames(int rows, int cols, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  ad::Matrix x(rows, cols);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return x;
}

}  // namespace

TEST_CASE("lattice loss matches enumeration") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const int T = 1 + i % 4, U = i % 4, V = 1 + i % 5;
    const TransducerLattice l = RandomLattice(rng, T, U, V);
    CHECK(std::abs(TransducerNll(l) - TransducerNllBruteForce(l)) < 1e-9);
  }
}

TEST_CASE("loss hand-worked values") {
  // T=2, U=1, uniform over 3 symbols: two alignments of probability (1/3)^3.
  TransducerLattice l;
  l.log_blank = ad::Matrix::Constant(2, 2, std::log(1.0 / 3.0));
  l.log_emit = ad::Matrix::Constant(2, 1, std::log(1.0 / 3.0));
  CHECK(TransducerNll(l) == doctest::Approx(-std::log(2.0 / 27.0)).epsilon(1e-12));
  CHECK(TransducerNll(l) == doctest::Approx(2.6027).epsilon(1e-4));
  TransducerLattice one;
  one.log_blank = ad::Matrix::Constant(1, 1, std::log(0.3));
  one.log_emit.resize(1, 0);
  CHECK(TransducerNll(one) == doctest::Approx(-std::log(0.3)));
  CHECK(CountAlignments(1, 1) == 1);
  CHECK(CountAlignments(2, 1) == 2);
}

TEST_CASE("lattice gradient matches finite differences") {
  std::mt19937_64 rng(4);
  const TransducerLattice l = RandomLattice(rng, 4, 3, 4);
  LatticeGradient g;
  TransducerNll(l, &g);
  const double eps = 1e-6;
  for (int t = 0; t < 4; ++t) {
    for (int u = 0; u <= 3; ++u) {
      TransducerLattice a = l, b = l;
      a.log_blank(t, u) += eps;
      b.log_blank(t, u) -= eps;
      CHECK(g.d_blank(t, u) ==
            doctest::Approx((TransducerNll(a) - TransducerNll(b)) / (2 * eps)).epsilon(1e-6));
      if (u < 3) {
        a = l;
        b = l;
        a.log_emit(t, u) += eps;
        b.log_emit(t, u) -= eps;
        CHECK(g.d_emit(t, u) ==
              doctest::Approx((TransducerNll(a) - TransducerNll(b)) / (2 * eps)).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("loss is stable for large logits") {
  std::mt19937_64 rng(9);
  TransducerLattice l = RandomLattice(rng, 6, 4, 3);
  l.log_blank *= 25.0;
  l.log_emit *= 25.0;
  CHECK(std::isfinite(TransducerNll(l)));
}

TEST_CASE("brute force refuses oversized instances") {
  TransducerLattice l;
  l.log_blank = ad::Matrix::Zero(30, 16);
  l.log_emit = ad::Matrix::Zero(30, 15);
  CHECK_THROWS_AS(TransducerNllBruteForce(l), Error);
}

TEST_CASE("model loss agrees with the oracle") {
  TransducerModel m(Tiny());
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> sym(0, 5);
  for (int i = 0; i < 20; ++i) {
    const ad::Matrix x = RandomFrames(2 + i % 7, 5, i);
    std::vector<int> y(i % 4);
    for (int &s : y) s = sym(rng);
    const ad::Matrix enc = m.Encode(x, TaskSet::FromAuxMask(i % 16));
    const double dp = RnntLoss(m, enc, y);
    CHECK(dp >= 0.0);
    CHECK(std::abs(dp - RnntLossBruteForce(m, enc, y)) < 1e-9);
  }
}

TEST_CASE("shapes") {
  TransducerModel m(Tiny());
  CHECK(m.FeatureEncode(RandomFrames(8, 5, 1)).rows() == 4);
  CHECK(m.FeatureEncode(RandomFrames(7, 5, 1)).rows() == 4);
  CHECK(m.FeatureEncode(ad::Matrix::Zero(7, 5)).allFinite());
  CHECK_THROWS_AS(m.FeatureEncode(ad::Matrix::Zero(0, 5)), Error);
  const ad::Matrix f = m.FeatureEncode(RandomFrames(9, 5, 2));
  CHECK(m.ContextEncode(f).rows() == f.rows());
  CHECK(m.ContextEncode(f).cols() == f.cols());
  CHECK(m.Predict(std::vector<int>{}).rows() == 1);
  CHECK(m.Predict(std::vector<int>{1, 2, 3}).rows() == 4);
  CHECK(m.Predict(std::vector<int>{1, 2}) == m.Predict(std::vector<int>{1, 2}));
  CHECK_THROWS_AS(m.Predict(std::vector<int>{m.blank_id()}), Error);
  const ad::RowVector h = f.row(0), g = m.Predict(std::vector<int>{}).row(0);
  const ad::RowVector logits = m.Joint(h, g);
  CHECK(logits.size() == m.vocab_size());
  const ad::RowVector lp = m.JointLogProbs(m.ProjectEncoder(f).row(0), m.PredictorStart().joint_proj);
  CHECK(lp.array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
  // The joint hidden layer is linear in (h, g) before its nonlinearity.
  const ad::RowVector pre = m.JointPreActivation(h, g);
  CHECK((m.JointPreActivation(2.0 * h, 2.0 * g) - 2.0 * pre).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("utterances are encoded independently") {
  TransducerModel m(Tiny());
  const ad::Matrix a = RandomFrames(9, 5, 1), b = RandomFrames(6, 5, 2);
  const ad::Matrix ea = m.Encode(a, TaskSet::All());
  m.Encode(b, TaskSet::All());
  CHECK(m.Encode(a, TaskSet::All()) == ea);
}

TEST_CASE("decoding contracts") {
  TransducerModel m(Tiny());
  const ad::Matrix enc = m.Encode(RandomFrames(12, 5, 4), TaskSet::All());
  const Hypothesis g1 = GreedyDecode(m, enc, 1);
  CHECK(g1.tokens.size() <= static_cast<size_t>(enc.rows()));
  const Hypothesis greedy = GreedyDecode(m, enc, 8);
  const auto beam1 = BeamDecode(m, enc, 1, 8);
  REQUIRE(beam1.size() == 1);
  CHECK(beam1[0].tokens == greedy.tokens);
  const auto beam4 = BeamDecode(m, enc, 4, 8);
  CHECK(beam4.size() <= 4);
  for (size_t i = 1; i < beam4.size(); ++i) CHECK(beam4[i - 1].score >= beam4[i].score);
  CHECK(beam4[0].score >= greedy.score - 1e-12);
  for (const auto &h : beam4) {
    CHECK(h.score <= 0.0);
    for (int t : h.tokens) CHECK(t != m.blank_id());
  }
  CHECK_THROWS_AS(BeamDecode(m, enc, 0, 8), Error);
}

TEST_CASE("a model that always prefers blank emits nothing") {
  TransducerModel m(Tiny());
  for (auto &p : m.Parameters()) {
    if (p.name == "joint.out.bias") {
      p.value->setZero();
      (*p.value)(0, m.blank_id()) = 100.0;
    }
  }
  const ad::Matrix enc = m.Encode(RandomFrames(10, 5, 1), TaskSet::All());
  CHECK(GreedyDecode(m, enc, 8).tokens.empty());
}

TEST_CASE("grad check on a quadratic") {
  ad::Matrix w(2, 3);
  w << 1, -2, 0.5, 3, 0.25, -1;
  ad::Matrix g = 2.0 * w;
  GradCheckTensor t{"w", &w, &g};
  const auto r = GradCheck(std::span<const GradCheckTensor>(&t, 1), [&] { return w.squaredNorm(); },
                           1e-5, 1e-7, 10, 1);
  CHECK(r.entries.size() == 6);
  CHECK(r.max_rel_error < 1e-7);
  CHECK(r.passed());
}

TEST_CASE("grad check on the transducer loss for every strategy and position") {
  const std::vector<int> y = {1, 4, 2};
  for (auto s : {ActivationStrategy::kPerCombination, ActivationStrategy::kPerTaskSum}) {
    for (auto p : {ActivationPosition::kAfterFeatureEncoder, ActivationPosition::kAfterFullEncoder,
                   ActivationPosition::kBoth}) {
      TransducerModel m(Tiny(s, p));
      const auto r = GradCheckModel(m, RandomFrames(11, 5, 1), TaskSet::FromAuxMask(5), y, 1e-5,
                                    1e-4, 4, 2);
      CAPTURE(ToString(s));
      CAPTURE(ToString(p));
      CHECK(r.passed());
    }
  }
}
