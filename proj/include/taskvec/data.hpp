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

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "taskvec/autodiff.hpp"
#include "taskvec/codec.hpp"

namespace taskvec {

// Knobs of the synthetic mixed-annotation corpus. Every frame of a word is
//   mean(word) + offset(speaker) + offset(language) + N(0, noise_sigma^2 I),
// turns are separated by short pauses drawn around a silence mean, and the
// per-word means and offsets are drawn once per seed.
struct GenConfig {
  uint64_t seed = 1;
  std::vector<std::string> languages = {"de", "en"};
  int lexicon_size = 50;
  std::vector<std::string> entity_types = {"LOC", "PER"};
  int entity_phrases_per_type = 3;
  int entity_max_words = 2;
  double entity_prob = 0.3;
  int speaker_pool = 8;
  int speakers_min = 1;
  int speakers_max = 3;
  int turns_min = 1;
  int turns_max = 4;
  int words_per_turn_min = 2;
  int words_per_turn_max = 6;
  int frames_per_word_min = 2;
  int frames_per_word_max = 4;
  int pause_frames_min = 2;
  int pause_frames_max = 3;
  int input_dim = 16;
  // Speaker offsets occupy the first speaker_dims coordinates and word means
  // the rest; 0 lets both span the whole space.
  int speaker_dims = 4;
  double noise_sigma = 0.1;
  // Offset norms relative to the expected word-mean norm sqrt(input_dim).
  double speaker_offset_scale = 0.5;
  double language_offset_scale = 0.5;
  int train_utterances = 800;
  double partial_fraction = 0.5;
  int dev_utterances = 100;
  int test_utterances = 100;

  void Validate() const;
};

void to_json(nlohmann::json &j, const GenConfig &c);
// Missing keys keep their defaults; unknown keys are a usage error.
void from_json(const nlohmann::json &j, GenConfig &c);

enum class Split { kTrainFull, kTrainPartial, kDev, kTest };
inline constexpr Split kAllSplits[] = {Split::kTrainFull, Split::kTrainPartial, Split::kDev,
                                       Split::kTest};
std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct Corpus {
  CodecConfig codec;
  std::vector<AnnotatedUtterance> train_full;
  std::vector<AnnotatedUtterance> train_partial;
  std::vector<AnnotatedUtterance> dev;
  std::vector<AnnotatedUtterance> test;

  const std::vector<AnnotatedUtterance> &split(Split s) const;
  std::vector<AnnotatedUtterance> &split(Split s);
  size_t size() const;
};

// Statistical structure behind a generated corpus, exposed for tests.
struct GeneratorParams {
  CodecConfig codec;
  std::vector<std::string> words;  // every lexicon word, sorted
  std::vector<std::vector<double>> word_means;
  std::vector<std::vector<double>> speaker_offsets;
  std::vector<std::vector<double>> language_offsets;  // in cfg.languages order
  std::vector<double> silence_mean;
  // entity_phrases[language][type] -> phrases (word lists)
  std::vector<std::vector<std::vector<std::vector<std::string>>>> entity_phrases;
};

GeneratorParams DrawGeneratorParams(const GenConfig &cfg);
Corpus GenerateCorpus(const GenConfig &cfg);

// kMixed draws per utterance: with probability uniform_fraction a uniform
// subset, otherwise the available labels.
enum class CombinationPolicy { kFromAvailableLabels, kUniformRandomSubset, kMixed };
std::string_view ToString(CombinationPolicy p);
CombinationPolicy ParsePolicy(std::string_view s);

using Rng = std::mt19937_64;

// Always a subset of utt.available that contains ASR.
TaskSet SelectTaskCombination(const AnnotatedUtterance &utt, CombinationPolicy policy, Rng &rng,
                              double uniform_fraction = 0.5);

// Utterances padded to a common frame count. Each element keeps its own task
// set and the reference encoded for exactly that set.
struct Batch {
  int max_frames = 0;
  int input_dim = 0;
  std::vector<float> frames;  // size() x max_frames x input_dim, zero padded
  std::vector<int> lengths;
  std::vector<std::vector<int>> targets;
  std::vector<TaskSet> tasks;
  std::vector<std::string> ids;

  int size() const { return static_cast<int>(lengths.size()); }
  // Frames of element b, padding removed.
  ad::Matrix Frames(int b) const;
};

Batch MakeBatch(std::span<const AnnotatedUtterance> pool, std::span<const size_t> indices,
                CombinationPolicy policy, Rng &rng, const TokenVocab &vocab,
                double uniform_fraction = 0.5);

// Independent per-utterance stream, stable under reordering and threading.
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

}  // namespace taskvec
