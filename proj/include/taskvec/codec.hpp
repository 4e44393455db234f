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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace taskvec {

// Task identifiers in declaration order. The value is the bit position in a
// TaskSet mask; ASR is the always-active primary task.
enum class TaskId : int { kAsr = 0, kScd = 1, kEndpoint = 2, kNer = 3, kLid = 4 };

inline constexpr int kNumAuxTasks = 4;

std::string_view TaskName(TaskId task);

// Bitmask over tasks. Bit 0 (ASR) is always set; bits 1..K are the auxiliary
// tasks. Masks with bits beyond the four known auxiliary tasks are allowed so
// that the activation bank can be exercised for arbitrary K.
class TaskSet {
 public:
  constexpr TaskSet() = default;

  static TaskSet FromBits(uint32_t bits);
  static TaskSet AsrOnly() { return TaskSet(); }
  // All K auxiliary tasks plus ASR.
  static TaskSet All(int num_aux = kNumAuxTasks);
  // Inverse of the combination index: auxiliary subset `index` plus ASR.
  static TaskSet FromAuxMask(uint32_t aux_mask);
  // Comma separated task names, e.g. "asr,scd,lid". ASR is implicit. Unknown
  // names raise a usage error.
  static TaskSet Parse(std::string_view list);

  uint32_t bits() const { return bits_; }
  uint32_t aux_mask() const { return bits_ >> 1; }
  bool Contains(TaskId task) const { return ContainsBit(static_cast<int>(task)); }
  bool ContainsBit(int bit) const { return (bits_ >> bit) & 1u; }
  bool IsSubsetOf(const TaskSet &other) const { return (bits_ & ~other.bits_) == 0; }
  int NumAux() const;
  TaskSet With(TaskId task) const;
  TaskSet Intersect(const TaskSet &other) const { return TaskSet(bits_ & other.bits_); }

  // Canonical comma separated form, in declaration order.
  std::string ToString() const;

  friend bool operator==(const TaskSet &, const TaskSet &) = default;

 private:
  constexpr explicit TaskSet(uint32_t bits) : bits_(bits | 1u) {}
  uint32_t bits_ = 1u;
};

struct CodecConfig {
  std::vector<std::string> languages;
  std::vector<std::string> entity_types;
  std::map<std::string, std::vector<std::string>> lexicons;  // language -> words
};

enum class TokenKind { kWord, kBlank, kTask };

// Vocabulary id layout:
//   [words of each language, languages sorted, words sorted, deduplicated]
//   <scd> <ep> <ne:TYPE>... (types sorted) </ne> <lid:LANG>... (sorted)
//   <blank>   (always the last id)
class TokenVocab {
 public:
  static TokenVocab Build(const CodecConfig &config);

  int size() const { return static_cast<int>(strings_.size()); }
  // Number of non-blank symbols; the transducer outputs size() = V + 1 logits.
  int num_symbols() const { return size() - 1; }
  int blank_id() const { return size() - 1; }
  int num_words() const { return num_words_; }

  int scd_id() const { return scd_id_; }
  int ep_id() const { return ep_id_; }
  int ne_close_id() const { return ne_close_id_; }
  int NeOpenId(std::string_view type) const;
  int LidId(std::string_view language) const;

  std::optional<int> Find(std::string_view token) const;
  int WordId(std::string_view word) const;  // throws for unknown words
  const std::string &ToString(int id) const { return strings_.at(id); }

  TokenKind Kind(int id) const;
  bool IsWord(int id) const { return id >= 0 && id < num_words_; }
  bool IsTaskToken(int id) const { return Kind(id) == TokenKind::kTask; }
  // Task owning a task token; nullopt for words and blank.
  std::optional<TaskId> TaskOf(int id) const;
  bool IsNeOpen(int id) const;
  std::string EntityTypeOf(int ne_open_id) const;
  std::string LanguageOf(int lid_id) const;

  const CodecConfig &config() const { return config_; }

 private:
  CodecConfig config_;
  std::vector<std::string> strings_;
  std::unordered_map<std::string, int> index_;
  int num_words_ = 0;
  int scd_id_ = -1;
  int ep_id_ = -1;
  int ne_open_begin_ = -1;
  int ne_close_id_ = -1;
  int lid_begin_ = -1;
};

// Row-major single precision frame matrix (rows = time).
struct FeatureMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  float at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
  std::span<const float> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }
  friend bool operator==(const FeatureMatrix &, const FeatureMatrix &) = default;
};

// Entity covering words [begin, end).
struct EntitySpan {
  std::string type;
  int begin = 0;
  int end = 0;

  friend auto operator<=>(const EntitySpan &, const EntitySpan &) = default;
};

// One utterance with per-task optional annotations. Gap g sits between
// word g-1 and word g; gap |words| is the final gap.
struct AnnotatedUtterance {
  std::string id;
  FeatureMatrix frames;
  std::vector<std::string> words;
  std::optional<std::string> language;
  std::optional<std::vector<int>> scd_gaps;
  std::optional<std::vector<int>> ep_gaps;
  std::optional<std::vector<EntitySpan>> spans;
  TaskSet available;

  friend bool operator==(const AnnotatedUtterance &, const AnnotatedUtterance &) = default;
};

// Checks the annotation-availability and span/gap invariants; throws on
// violation.
void ValidateUtterance(const AnnotatedUtterance &utt);

struct TaskPredictions {
  std::vector<std::string> words;
  std::optional<std::string> language;
  std::vector<int> scd_gaps;
  std::vector<int> ep_gaps;
  std::vector<EntitySpan> spans;
  int malformed = 0;

  friend bool operator==(const TaskPredictions &, const TaskPredictions &) = default;
};

std::vector<int> EncodeReference(const AnnotatedUtterance &utt, TaskSet active,
                                 const TokenVocab &vocab);

// Total function: accepts any id sequence (ids out of range and blanks are
// counted as malformed and skipped).
TaskPredictions ParseHypothesis(std::span<const int> tokens, const TokenVocab &vocab);

std::vector<int> StripTaskTokens(std::span<const int> tokens, const TokenVocab &vocab);

// The annotations of `utt` visible under `active`, in TaskPredictions form.
// This is what ParseHypothesis(EncodeReference(utt, active)) must reproduce.
TaskPredictions RestrictAnnotations(const AnnotatedUtterance &utt, TaskSet active);

std::vector<int> TokenIds(std::span<const std::string> tokens, const TokenVocab &vocab);
std::string JoinTokens(std::span<const int> ids, const TokenVocab &vocab);

}  // namespace taskvec
