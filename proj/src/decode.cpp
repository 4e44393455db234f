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

#include <algorithm>
#include <map>
#include <numeric>

#include "taskvec/error.hpp"
#include "taskvec/model.hpp"

namespace taskvec {

Hypothesis GreedyDecode(const TransducerModel &model, const ad::Matrix &enc,
                        int max_symbols_per_frame) {
  if (max_symbols_per_frame < 1) ThrowUsage("max symbols per frame must be >= 1");
  const ad::Matrix hp = model.ProjectEncoder(enc);
  const int blank = model.blank_id();
  Hypothesis hyp;
  PredictorState state = model.PredictorStart();
  for (Eigen::Index t = 0; t < hp.rows(); ++t) {
    for (int emitted = 0;; ++emitted) {
      const ad::RowVector lp = model.JointLogProbs(hp.row(t), state.joint_proj);
      if (emitted == max_symbols_per_frame) {
        hyp.score += lp(blank);
        break;
      }
      Eigen::Index best = 0;
      lp.maxCoeff(&best);
      hyp.score += lp(best);
      if (best == blank) break;
      hyp.tokens.push_back(static_cast<int>(best));
      state = model.PredictorStep(state, static_cast<int>(best));
    }
  }
  return hyp;
}

namespace {

struct BeamEntry {
  std::vector<int> tokens;
  double score = 0.0;
  PredictorState state;
};

// Candidate produced during one expansion step. `parent` indexes the active
// list; `token` is -1 for the blank (frame-terminating) move.
struct Candidate {
  double score;
  int parent;
  int token;
  bool ended;
};

}  // namespace

std::vector<Hypothesis> BeamDecode(const TransducerModel &model, const ad::Matrix &enc,
                                   int beam_size, int max_symbols_per_frame) {
  if (beam_size < 1) ThrowUsage("beam size must be >= 1");
  if (max_symbols_per_frame < 1) ThrowUsage("max symbols per frame must be >= 1");
  const ad::Matrix hp = model.ProjectEncoder(enc);
  const int blank = model.blank_id();
  const int num_symbols = model.config().num_symbols;

  std::vector<BeamEntry> beam(1);
  beam[0].state = model.PredictorStart();

  for (Eigen::Index t = 0; t < hp.rows(); ++t) {
    std::vector<BeamEntry> active = std::move(beam);
    // Hypotheses that have taken the blank out of frame t, keyed by tokens.
    std::map<std::vector<int>, BeamEntry> ended;

    for (int step = 0; !active.empty(); ++step) {
      std::vector<Candidate> cands;
      for (int a = 0; a < static_cast<int>(active.size()); ++a) {
        const ad::RowVector lp = model.JointLogProbs(hp.row(t), active[a].state.joint_proj);
        cands.push_back({active[a].score + lp(blank), a, -1, true});
        if (step == max_symbols_per_frame) continue;
        std::vector<int> order(num_symbols);
        std::iota(order.begin(), order.end(), 0);
        const int k = std::min(beam_size, num_symbols);
        std::partial_sort(order.begin(), order.begin() + k, order.end(),
                          [&lp](int x, int y) { return lp(x) > lp(y) || (lp(x) == lp(y) && x < y); });
        for (int i = 0; i < k; ++i)
          cands.push_back({active[a].score + lp(order[i]), a, order[i], false});
      }

      // Fold blank candidates into the ended pool first so merged scores
      // compete in the pruning below.
      for (const auto &c : cands) {
        if (!c.ended) continue;
        const auto &src = active[c.parent];
        auto it = ended.find(src.tokens);
        if (it == ended.end()) {
          ended.emplace(src.tokens, BeamEntry{src.tokens, c.score, src.state});
        } else {
          it->second.score = LogAddExp(it->second.score, c.score);
        }
      }

      // Rank ended hypotheses and emission candidates together. Ties prefer
      // emissions, then lower token ids, matching the greedy argmax.
      struct Ranked {
        double score;
        bool ended;
        const std::vector<int> *ended_key;
        int cand;
      };
      std::vector<Ranked> ranked;
      for (const auto &[key, entry] : ended) ranked.push_back({entry.score, true, &key, -1});
      for (int i = 0; i < static_cast<int>(cands.size()); ++i)
        if (!cands[i].ended) ranked.push_back({cands[i].score, false, nullptr, i});
      const size_t keep = std::min<size_t>(beam_size, ranked.size());
      std::partial_sort(ranked.begin(), ranked.begin() + keep, ranked.end(),
                        [&cands](const Ranked &x, const Ranked &y) {
                          if (x.score != y.score) return x.score > y.score;
                          if (x.ended != y.ended) return !x.ended;
                          if (!x.ended) return cands[x.cand].token < cands[y.cand].token;
                          return *x.ended_key < *y.ended_key;
                        });

      std::map<std::vector<int>, BeamEntry> kept_ended;
      std::vector<BeamEntry> next_active;
      for (size_t i = 0; i < keep; ++i) {
        const Ranked &r = ranked[i];
        if (r.ended) {
          auto node = ended.extract(*r.ended_key);
          kept_ended.insert(std::move(node));
        } else {
          const Candidate &c = cands[r.cand];
          const BeamEntry &src = active[c.parent];
          BeamEntry e;
          e.tokens = src.tokens;
          e.tokens.push_back(c.token);
          e.score = c.score;
          e.state = model.PredictorStep(src.state, c.token);
          next_active.push_back(std::move(e));
        }
      }
      ended = std::move(kept_ended);
      active = std::move(next_active);
    }

    beam.clear();
    for (auto &[key, entry] : ended) beam.push_back(std::move(entry));
    std::stable_sort(beam.begin(), beam.end(), [](const BeamEntry &x, const BeamEntry &y) {
      return x.score > y.score;
    });
  }

  std::vector<Hypothesis> out;
  for (auto &e : beam) out.push_back({std::move(e.tokens), e.score});
  return out;
}

}  // namespace taskvec
