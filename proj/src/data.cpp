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

#include "taskvec/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "taskvec/error.hpp"

namespace taskvec {

namespace {

std::vector<double> Gaussian(int dim, double scale, Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto &x : v) x = scale * normal(rng);
  return v;
}

std::vector<double> Direction(int dim, double norm, Rng &rng) {
  auto v = Gaussian(dim, 1.0, rng);
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (auto &x : v) x *= norm / n;
  return v;
}

int UniformInt(int lo, int hi, Rng &rng) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::string PseudoWord(Rng &rng, bool capitalized) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  const int syllables = UniformInt(2, 3, rng);
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += kConsonants[UniformInt(0, static_cast<int>(kConsonants.size()) - 1, rng)];
    w += kVowels[UniformInt(0, static_cast<int>(kVowels.size()) - 1, rng)];
  }
  if (capitalized) w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

void CheckRange(int lo, int hi, const char *name) {
  if (lo < 1 || hi < lo) ThrowUsage(std::string("gen config: bad range for ") + name);
}

}  // namespace

void GenConfig::Validate() const {
  if (languages.empty()) ThrowUsage("gen config: need at least one language");
  if (std::set<std::string>(languages.begin(), languages.end()).size() != languages.size())
    ThrowUsage("gen config: duplicate language");
  if (std::set<std::string>(entity_types.begin(), entity_types.end()).size() !=
      entity_types.size())
    ThrowUsage("gen config: duplicate entity type");
  if (lexicon_size < 1) ThrowUsage("gen config: lexicon_size must be >= 1");
  if (!entity_types.empty()) {
    if (entity_phrases_per_type < 1 || entity_max_words < 1)
      ThrowUsage("gen config: entity inventory sizes must be >= 1");
  }
  if (entity_prob < 0.0 || entity_prob > 1.0) ThrowUsage("gen config: entity_prob in [0, 1]");
  CheckRange(speakers_min, speakers_max, "speakers");
  if (speaker_pool < speakers_max) ThrowUsage("gen config: speaker_pool < speakers_max");
  CheckRange(turns_min, turns_max, "turns");
  CheckRange(words_per_turn_min, words_per_turn_max, "words_per_turn");
  CheckRange(frames_per_word_min, frames_per_word_max, "frames_per_word");
  if (pause_frames_min < 0 || pause_frames_max < pause_frames_min)
    ThrowUsage("gen config: bad range for pause_frames");
  if (input_dim < 1) ThrowUsage("gen config: input_dim must be >= 1");
  if (speaker_dims < 0 || speaker_dims >= input_dim)
    ThrowUsage("gen config: speaker_dims must lie in [0, input_dim)");
  if (!(noise_sigma >= 0.0)) ThrowUsage("gen config: noise_sigma must be >= 0");
  if (speaker_offset_scale < 0.0 || language_offset_scale < 0.0)
    ThrowUsage("gen config: offset scales must be >= 0");
  if (train_utterances < 0 || dev_utterances < 0 || test_utterances < 0)
    ThrowUsage("gen config: split sizes must be >= 0");
  if (partial_fraction < 0.0 || partial_fraction > 1.0)
    ThrowUsage("gen config: partial_fraction in [0, 1]");
}

#define TASKVEC_GEN_FIELDS(X)                                                        \
  X(seed) X(languages) X(lexicon_size) X(entity_types) X(entity_phrases_per_type)    \
  X(entity_max_words) X(entity_prob) X(speaker_pool) X(speakers_min) X(speakers_max) \
  X(turns_min) X(turns_max) X(words_per_turn_min) X(words_per_turn_max)              \
  X(frames_per_word_min) X(frames_per_word_max) X(pause_frames_min)                  \
  X(pause_frames_max) X(input_dim) X(speaker_dims) X(noise_sigma) X(speaker_offset_scale)            \
  X(language_offset_scale) X(train_utterances) X(partial_fraction)                   \
  X(dev_utterances) X(test_utterances)

void to_json(nlohmann::json &j, const GenConfig &c) {
  j = nlohmann::json::object();
#define X(name) j[#name] = c.name;
  TASKVEC_GEN_FIELDS(X)
#undef X
}

void from_json(const nlohmann::json &j, GenConfig &c) {
  if (!j.is_object()) ThrowUsage("gen config must be a JSON object");
  static const std::set<std::string> known = {
#define X(name) #name,
      TASKVEC_GEN_FIELDS(X)
#undef X
  };
  for (const auto &[key, value] : j.items())
    if (!known.count(key)) ThrowUsage("gen config: unknown key '" + key + "'");
  try {
#define X(name) \
  if (j.contains(#name)) j.at(#name).get_to(c.name);
    TASKVEC_GEN_FIELDS(X)
#undef X
  } catch (const nlohmann::json::exception &e) {
    ThrowUsage(std::string("gen config: ") + e.what());
  }
}

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrainFull:
      return "train-full";
    case Split::kTrainPartial:
      return "train-partial";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  for (Split s : kAllSplits)
    if (SplitName(s) == name) return s;
  ThrowUsage("unknown split: " + std::string(name));
}

const std::vector<AnnotatedUtterance> &Corpus::split(Split s) const {
  switch (s) {
    case Split::kTrainFull:
      return train_full;
    case Split::kTrainPartial:
      return train_partial;
    case Split::kDev:
      return dev;
    case Split::kTest:
      return test;
  }
  return test;
}

std::vector<AnnotatedUtterance> &Corpus::split(Split s) {
  return const_cast<std::vector<AnnotatedUtterance> &>(std::as_const(*this).split(s));
}

size_t Corpus::size() const {
  return train_full.size() + train_partial.size() + dev.size() + test.size();
}

uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  // splitmix64 finalizer over a combination of both inputs.
  uint64_t z = seed * 0x9E3779B97F4A7C15ull + stream + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GeneratorParams DrawGeneratorParams(const GenConfig &cfg) {
  cfg.Validate();
  Rng rng(DeriveSeed(cfg.seed, 0xC0DEC));
  GeneratorParams p;
  std::set<std::string> used;
  auto fresh = [&](bool capitalized) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      std::string w = PseudoWord(rng, capitalized);
      if (used.insert(w).second) return w;
    }
    ThrowRuntime("could not draw enough distinct pseudo-words");
  };

  p.codec.languages = cfg.languages;
  p.codec.entity_types = cfg.entity_types;
  p.entity_phrases.resize(cfg.languages.size());
  for (size_t l = 0; l < cfg.languages.size(); ++l) {
    auto &lex = p.codec.lexicons[cfg.languages[l]];
    for (int i = 0; i < cfg.lexicon_size; ++i) lex.push_back(fresh(false));
    p.entity_phrases[l].resize(cfg.entity_types.size());
    for (size_t e = 0; e < cfg.entity_types.size(); ++e) {
      for (int k = 0; k < cfg.entity_phrases_per_type; ++k) {
        std::vector<std::string> phrase;
        const int n = UniformInt(1, cfg.entity_max_words, rng);
        for (int w = 0; w < n; ++w) {
          phrase.push_back(fresh(true));
          lex.push_back(phrase.back());
        }
        p.entity_phrases[l][e].push_back(std::move(phrase));
      }
    }
  }
  p.words.assign(used.begin(), used.end());

  // Word means vary only outside the first speaker_dims coordinates, where
  // the speaker offsets live.
  const int k = cfg.speaker_dims;
  const int word_dims = cfg.input_dim - k;
  const double base_norm = std::sqrt(static_cast<double>(word_dims));
  for (size_t i = 0; i < p.words.size(); ++i) {
    auto mean = Gaussian(word_dims, 1.0, rng);
    mean.insert(mean.begin(), k, 0.0);
    p.word_means.push_back(std::move(mean));
  }
  for (int s = 0; s < cfg.speaker_pool; ++s) {
    auto offset = Direction(k > 0 ? k : cfg.input_dim, cfg.speaker_offset_scale * base_norm, rng);
    offset.resize(cfg.input_dim, 0.0);
    p.speaker_offsets.push_back(std::move(offset));
  }
  for (size_t l = 0; l < cfg.languages.size(); ++l)
    p.language_offsets.push_back(
        Direction(cfg.input_dim, cfg.language_offset_scale * base_norm, rng));
  p.silence_mean = Gaussian(cfg.input_dim, 0.2, rng);
  return p;
}

namespace {

AnnotatedUtterance GenerateUtterance(const GenConfig &cfg, const GeneratorParams &p,
                                     uint64_t index, std::string id) {
  Rng rng(DeriveSeed(cfg.seed, index + 1));
  std::normal_distribution<double> noise(0.0, 1.0);
  AnnotatedUtterance utt;
  utt.id = std::move(id);
  const int lang = UniformInt(0, static_cast<int>(cfg.languages.size()) - 1, rng);
  const auto &lex = p.codec.lexicons.at(cfg.languages[lang]);
  // Regular (non-entity) words come first in each lexicon.
  const int regular = cfg.lexicon_size;

  std::vector<int> pool(cfg.speaker_pool);
  for (int i = 0; i < cfg.speaker_pool; ++i) pool[i] = i;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(UniformInt(cfg.speakers_min, cfg.speakers_max, rng));

  const int turns = UniformInt(cfg.turns_min, cfg.turns_max, rng);
  std::vector<int> scd, ep;
  std::vector<EntitySpan> spans;
  std::vector<std::vector<double>> frames;

  auto emit_frame = [&](const std::vector<double> &mean, const std::vector<double> *spk) {
    std::vector<double> f(cfg.input_dim);
    for (int k = 0; k < cfg.input_dim; ++k) {
      f[k] = mean[k] + cfg.noise_sigma * noise(rng);
      if (spk) f[k] += (*spk)[k] + p.language_offsets[lang][k];
    }
    frames.push_back(std::move(f));
  };

  int prev_speaker = -1;
  for (int turn = 0; turn < turns; ++turn) {
    const int speaker = pool[UniformInt(0, static_cast<int>(pool.size()) - 1, rng)];
    const int turn_start = static_cast<int>(utt.words.size());
    if (turn > 0) {
      if (speaker != prev_speaker) scd.push_back(turn_start);
      const int pause = UniformInt(cfg.pause_frames_min, cfg.pause_frames_max, rng);
      for (int f = 0; f < pause; ++f) emit_frame(p.silence_mean, nullptr);
    }
    prev_speaker = speaker;

    std::vector<std::string> words;
    const int n = UniformInt(cfg.words_per_turn_min, cfg.words_per_turn_max, rng);
    for (int w = 0; w < n; ++w) words.push_back(lex[UniformInt(0, regular - 1, rng)]);
    if (!cfg.entity_types.empty() &&
        std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.entity_prob) {
      const int type = UniformInt(0, static_cast<int>(cfg.entity_types.size()) - 1, rng);
      const auto &phrases = p.entity_phrases[lang][type];
      const auto &phrase = phrases[UniformInt(0, static_cast<int>(phrases.size()) - 1, rng)];
      const int at = UniformInt(0, n, rng);
      words.insert(words.begin() + at, phrase.begin(), phrase.end());
      spans.push_back({cfg.entity_types[type], turn_start + at,
                       turn_start + at + static_cast<int>(phrase.size())});
    }
    for (const auto &w : words) {
      const auto it = std::lower_bound(p.words.begin(), p.words.end(), w);
      const auto &mean = p.word_means[it - p.words.begin()];
      const int len = UniformInt(cfg.frames_per_word_min, cfg.frames_per_word_max, rng);
      for (int f = 0; f < len; ++f) emit_frame(mean, &p.speaker_offsets[speaker]);
      utt.words.push_back(w);
    }
    ep.push_back(static_cast<int>(utt.words.size()));
  }

  utt.frames.rows = static_cast<int>(frames.size());
  utt.frames.cols = cfg.input_dim;
  utt.frames.data.reserve(frames.size() * cfg.input_dim);
  for (const auto &f : frames)
    for (double x : f) utt.frames.data.push_back(static_cast<float>(x));
  utt.language = cfg.languages[lang];
  utt.scd_gaps = std::move(scd);
  utt.ep_gaps = std::move(ep);
  std::sort(spans.begin(), spans.end(),
            [](const EntitySpan &a, const EntitySpan &b) { return a.begin < b.begin; });
  utt.spans = std::move(spans);
  utt.available = TaskSet::All();
  return utt;
}

}  // namespace

Corpus GenerateCorpus(const GenConfig &cfg) {
  const GeneratorParams params = DrawGeneratorParams(cfg);
  Corpus corpus;
  corpus.codec = params.codec;
  const int partial =
      static_cast<int>(std::lround(cfg.partial_fraction * cfg.train_utterances));
  const int full = cfg.train_utterances - partial;
  uint64_t index = 0;
  auto make = [&](Split split, int count) {
    auto &out = corpus.split(split);
    for (int i = 0; i < count; ++i, ++index) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s-%05d", std::string(SplitName(split)).c_str(), i);
      AnnotatedUtterance utt = GenerateUtterance(cfg, params, index, id);
      if (split == Split::kTrainPartial) {
        // Partially annotated data: transcripts and language only.
        utt.scd_gaps.reset();
        utt.ep_gaps.reset();
        utt.spans.reset();
        utt.available = TaskSet::AsrOnly().With(TaskId::kLid);
      }
      out.push_back(std::move(utt));
    }
  };
  make(Split::kTrainFull, full);
  make(Split::kTrainPartial, partial);
  make(Split::kDev, cfg.dev_utterances);
  make(Split::kTest, cfg.test_utterances);
  return corpus;
}

std::string_view ToString(CombinationPolicy p) {
  switch (p) {
    case CombinationPolicy::kFromAvailableLabels: return "from_available_labels";
    case CombinationPolicy::kUniformRandomSubset: return "uniform_random_subset";
    case CombinationPolicy::kMixed: return "mixed";
  }
  return "?";
}

CombinationPolicy ParsePolicy(std::string_view s) {
  if (s == "from_available_labels") return CombinationPolicy::kFromAvailableLabels;
  if (s == "uniform_random_subset") return CombinationPolicy::kUniformRandomSubset;
  if (s == "mixed") return CombinationPolicy::kMixed;
  ThrowUsage("unknown combination policy: " + std::string(s));
}

TaskSet SelectTaskCombination(const AnnotatedUtterance &utt, CombinationPolicy policy,
                              Rng &rng, double uniform_fraction) {
  if (policy == CombinationPolicy::kMixed)
    policy = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < uniform_fraction
                 ? CombinationPolicy::kUniformRandomSubset
                 : CombinationPolicy::kFromAvailableLabels;
  if (policy == CombinationPolicy::kFromAvailableLabels) return utt.available;
  std::vector<int> bits;
  for (int b = 1; b < 32; ++b)
    if (utt.available.ContainsBit(b)) bits.push_back(b);
  if (bits.empty()) return TaskSet::AsrOnly();
  const uint64_t draw = std::uniform_int_distribution<uint64_t>(
      0, (uint64_t{1} << bits.size()) - 1)(rng);
  uint32_t mask = 1u;
  for (size_t i = 0; i < bits.size(); ++i)
    if ((draw >> i) & 1u) mask |= 1u << bits[i];
  return TaskSet::FromBits(mask);
}

ad::Matrix Batch::Frames(int b) const {
  ad::Matrix m(lengths.at(b), input_dim);
  const size_t base = static_cast<size_t>(b) * max_frames * input_dim;
  for (int r = 0; r < lengths[b]; ++r)
    for (int c = 0; c < input_dim; ++c)
      m(r, c) = frames[base + static_cast<size_t>(r) * input_dim + c];
  return m;
}

Batch MakeBatch(std::span<const AnnotatedUtterance> pool, std::span<const size_t> indices,
                CombinationPolicy policy, Rng &rng, const TokenVocab &vocab,
                double uniform_fraction) {
  Batch batch;
  for (size_t i : indices) {
    if (i >= pool.size()) ThrowRuntime("batch index out of range");
    batch.max_frames = std::max(batch.max_frames, pool[i].frames.rows);
    if (batch.input_dim == 0) batch.input_dim = pool[i].frames.cols;
    if (pool[i].frames.cols != batch.input_dim) ThrowRuntime("batch: mixed input dims");
  }
  batch.frames.assign(indices.size() * batch.max_frames * batch.input_dim, 0.0f);
  for (size_t b = 0; b < indices.size(); ++b) {
    const AnnotatedUtterance &utt = pool[indices[b]];
    const TaskSet tasks = SelectTaskCombination(utt, policy, rng, uniform_fraction);
    std::copy(utt.frames.data.begin(), utt.frames.data.end(),
              batch.frames.begin() + b * batch.max_frames * batch.input_dim);
    batch.lengths.push_back(utt.frames.rows);
    batch.targets.push_back(EncodeReference(utt, tasks, vocab));
    batch.tasks.push_back(tasks);
    batch.ids.push_back(utt.id);
  }
  return batch;
}

}  // namespace taskvec
