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

#include "taskvec/codec.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "taskvec/error.hpp"

namespace taskvec {

namespace {

constexpr std::string_view kTaskNames[] = {"asr", "scd", "endpoint", "ner", "lid"};

std::vector<std::string> SortedUnique(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

std::string_view TaskName(TaskId task) {
  return kTaskNames[static_cast<int>(task)];
}

TaskSet TaskSet::FromBits(uint32_t bits) {
  if ((bits & 1u) == 0) ThrowUsage("task set must contain ASR");
  return TaskSet(bits);
}

TaskSet TaskSet::All(int num_aux) {
  if (num_aux < 0 || num_aux > 30) ThrowUsage("auxiliary task count out of range");
  return TaskSet((1u << (num_aux + 1)) - 1u);
}

TaskSet TaskSet::FromAuxMask(uint32_t aux_mask) {
  if (aux_mask >> 30) ThrowUsage("auxiliary mask out of range");
  return TaskSet((aux_mask << 1) | 1u);
}

TaskSet TaskSet::Parse(std::string_view list) {
  TaskSet out;
  size_t pos = 0;
  while (pos <= list.size()) {
    size_t comma = list.find(',', pos);
    if (comma == std::string_view::npos) comma = list.size();
    std::string_view name = list.substr(pos, comma - pos);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (!name.empty()) {
      if (name == "ep") name = "endpoint";
      if (name == "all") {
        out = TaskSet::All();
      } else {
        auto it = std::find(std::begin(kTaskNames), std::end(kTaskNames), name);
        if (it == std::end(kTaskNames)) ThrowUsage("unknown task name: " + std::string(name));
        out.bits_ |= 1u << (it - std::begin(kTaskNames));
      }
    }
    pos = comma + 1;
  }
  return out;
}

int TaskSet::NumAux() const { return __builtin_popcount(aux_mask()); }

TaskSet TaskSet::With(TaskId task) const {
  return TaskSet(bits_ | (1u << static_cast<int>(task)));
}

std::string TaskSet::ToString() const {
  std::string out;
  for (int bit = 0; bit < 32; ++bit) {
    if (!ContainsBit(bit)) continue;
    if (!out.empty()) out += ',';
    out += bit <= kNumAuxTasks ? std::string(kTaskNames[bit]) : "aux" + std::to_string(bit);
  }
  return out;
}

TokenVocab TokenVocab::Build(const CodecConfig &config) {
  if (config.languages.empty()) ThrowUsage("codec config needs at least one language");
  std::set<std::string> seen_langs;
  for (const auto &lang : config.languages) {
    if (!seen_langs.insert(lang).second) ThrowUsage("duplicate language: " + lang);
    auto it = config.lexicons.find(lang);
    if (it == config.lexicons.end() || it->second.empty())
      ThrowUsage("empty lexicon for language: " + lang);
  }
  std::set<std::string> seen_types;
  for (const auto &type : config.entity_types) {
    if (!seen_types.insert(type).second) ThrowUsage("duplicate entity type: " + type);
  }

  TokenVocab vocab;
  vocab.config_ = config;
  auto add = [&vocab](const std::string &s) {
    if (!vocab.index_.emplace(s, static_cast<int>(vocab.strings_.size())).second)
      ThrowUsage("token collides with an existing token: " + s);
    vocab.strings_.push_back(s);
  };

  const auto langs = SortedUnique(config.languages);
  for (const auto &lang : langs) {
    for (const auto &word : SortedUnique(config.lexicons.at(lang))) {
      if (word.empty() || word.front() == '<') ThrowUsage("invalid word: '" + word + "'");
      if (vocab.index_.count(word)) continue;  // shared across languages
      add(word);
    }
  }
  vocab.num_words_ = vocab.size();
  vocab.scd_id_ = vocab.size();
  add("<scd>");
  vocab.ep_id_ = vocab.size();
  add("<ep>");
  vocab.ne_open_begin_ = vocab.size();
  for (const auto &type : seen_types) add("<ne:" + type + ">");
  vocab.ne_close_id_ = vocab.size();
  add("</ne>");
  vocab.lid_begin_ = vocab.size();
  for (const auto &lang : langs) add("<lid:" + lang + ">");
  add("<blank>");
  return vocab;
}

int TokenVocab::NeOpenId(std::string_view type) const {
  auto id = Find("<ne:" + std::string(type) + ">");
  if (!id) ThrowRuntime("unknown entity type: " + std::string(type));
  return *id;
}

int TokenVocab::LidId(std::string_view language) const {
  auto id = Find("<lid:" + std::string(language) + ">");
  if (!id) ThrowRuntime("unknown language: " + std::string(language));
  return *id;
}

std::optional<int> TokenVocab::Find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int TokenVocab::WordId(std::string_view word) const {
  auto id = Find(word);
  if (!id || !IsWord(*id)) ThrowRuntime("word not in vocabulary: " + std::string(word));
  return *id;
}

TokenKind TokenVocab::Kind(int id) const {
  if (id < 0 || id >= size()) ThrowRuntime("token id out of range");
  if (id < num_words_) return TokenKind::kWord;
  if (id == blank_id()) return TokenKind::kBlank;
  return TokenKind::kTask;
}

std::optional<TaskId> TokenVocab::TaskOf(int id) const {
  if (id < num_words_ || id >= blank_id()) return std::nullopt;
  if (id == scd_id_) return TaskId::kScd;
  if (id == ep_id_) return TaskId::kEndpoint;
  if (id < lid_begin_) return TaskId::kNer;
  return TaskId::kLid;
}

bool TokenVocab::IsNeOpen(int id) const { return id >= ne_open_begin_ && id < ne_close_id_; }

std::string TokenVocab::EntityTypeOf(int ne_open_id) const {
  if (!IsNeOpen(ne_open_id)) ThrowRuntime("not an entity open tag");
  const std::string &s = strings_[ne_open_id];
  return s.substr(4, s.size() - 5);  // "<ne:" TYPE ">"
}

std::string TokenVocab::LanguageOf(int lid_id) const {
  if (TaskOf(lid_id) != TaskId::kLid) ThrowRuntime("not a language token");
  const std::string &s = strings_[lid_id];
  return s.substr(5, s.size() - 6);  // "<lid:" LANG ">"
}

void ValidateUtterance(const AnnotatedUtterance &utt) {
  const auto &a = utt.available;
  auto check = [&](bool present, TaskId task, const char *field) {
    if (present != a.Contains(task))
      ThrowRuntime("utterance " + utt.id + ": field '" + field +
                   "' presence disagrees with available tasks");
  };
  check(utt.language.has_value(), TaskId::kLid, "lang");
  check(utt.scd_gaps.has_value(), TaskId::kScd, "scd_gaps");
  check(utt.ep_gaps.has_value(), TaskId::kEndpoint, "ep_gaps");
  check(utt.spans.has_value(), TaskId::kNer, "spans");
  const int n = static_cast<int>(utt.words.size());
  for (const auto *gaps : {&utt.scd_gaps, &utt.ep_gaps}) {
    if (!gaps->has_value()) continue;
    for (int g : **gaps)
      if (g < 0 || g > n) ThrowRuntime("utterance " + utt.id + ": gap index out of range");
    if (!std::is_sorted((*gaps)->begin(), (*gaps)->end()) ||
        std::adjacent_find((*gaps)->begin(), (*gaps)->end()) != (*gaps)->end())
      ThrowRuntime("utterance " + utt.id + ": gaps must be strictly increasing");
  }
  if (utt.spans) {
    int last_end = 0;
    for (const auto &s : *utt.spans) {
      if (s.begin < last_end || s.begin >= s.end || s.end > n)
        ThrowRuntime("utterance " + utt.id + ": entity spans overlap or exceed word bounds");
      last_end = s.end;
    }
  }
  if (utt.frames.rows < 0 || utt.frames.data.size() !=
                                 static_cast<size_t>(utt.frames.rows) * utt.frames.cols)
    ThrowRuntime("utterance " + utt.id + ": frame matrix size mismatch");
}

std::vector<int> EncodeReference(const AnnotatedUtterance &utt, TaskSet active,
                                 const TokenVocab &vocab) {
  if (!active.IsSubsetOf(utt.available))
    ThrowRuntime("utterance " + utt.id + ": requested tasks {" + active.ToString() +
                 "} exceed annotated tasks {" + utt.available.ToString() + "}");
  const int n = static_cast<int>(utt.words.size());
  const bool scd = active.Contains(TaskId::kScd);
  const bool ep = active.Contains(TaskId::kEndpoint);
  const bool ner = active.Contains(TaskId::kNer);

  std::vector<char> scd_at(n + 1, 0), ep_at(n + 1, 0);
  std::vector<int> open_at(n + 1, -1), close_count(n + 1, 0);
  if (scd)
    for (int g : *utt.scd_gaps) scd_at[g] = 1;
  if (ep)
    for (int g : *utt.ep_gaps) ep_at[g] = 1;
  if (ner) {
    for (const auto &s : *utt.spans) {
      open_at[s.begin] = vocab.NeOpenId(s.type);
      ++close_count[s.end];
    }
  }

  std::vector<int> out;
  out.reserve(n * 2 + 2);
  if (active.Contains(TaskId::kLid)) out.push_back(vocab.LidId(*utt.language));
  for (int g = 0; g <= n; ++g) {
    for (int c = 0; c < close_count[g]; ++c) out.push_back(vocab.ne_close_id());
    if (scd_at[g]) out.push_back(vocab.scd_id());
    if (ep_at[g]) out.push_back(vocab.ep_id());
    if (g == n) break;
    if (open_at[g] >= 0) out.push_back(open_at[g]);
    out.push_back(vocab.WordId(utt.words[g]));
  }
  return out;
}

TaskPredictions ParseHypothesis(std::span<const int> tokens, const TokenVocab &vocab) {
  TaskPredictions pred;
  std::optional<std::pair<std::string, int>> open;  // type, begin
  for (int id : tokens) {
    if (id < 0 || id >= vocab.size() || id == vocab.blank_id()) {
      ++pred.malformed;
      continue;
    }
    const int gap = static_cast<int>(pred.words.size());
    if (vocab.IsWord(id)) {
      pred.words.push_back(vocab.ToString(id));
      continue;
    }
    switch (*vocab.TaskOf(id)) {
      case TaskId::kScd:
        if (pred.scd_gaps.empty() || pred.scd_gaps.back() != gap) pred.scd_gaps.push_back(gap);
        break;
      case TaskId::kEndpoint:
        if (pred.ep_gaps.empty() || pred.ep_gaps.back() != gap) pred.ep_gaps.push_back(gap);
        break;
      case TaskId::kLid:
        if (!pred.language) pred.language = vocab.LanguageOf(id);
        break;
      case TaskId::kNer:
        if (vocab.IsNeOpen(id)) {
          if (open) ++pred.malformed;  // previous open never closed
          open.emplace(vocab.EntityTypeOf(id), gap);
        } else if (!open || open->second == gap) {
          ++pred.malformed;  // stray close, or an empty span
          open.reset();
        } else {
          pred.spans.push_back({open->first, open->second, gap});
          open.reset();
        }
        break;
      case TaskId::kAsr:
        break;
    }
  }
  if (open) ++pred.malformed;
  return pred;
}

std::vector<int> StripTaskTokens(std::span<const int> tokens, const TokenVocab &vocab) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (int id : tokens)
    if (vocab.IsWord(id)) out.push_back(id);
  return out;
}

TaskPredictions RestrictAnnotations(const AnnotatedUtterance &utt, TaskSet active) {
  TaskPredictions pred;
  pred.words = utt.words;
  if (active.Contains(TaskId::kLid) && utt.language) pred.language = utt.language;
  if (active.Contains(TaskId::kScd) && utt.scd_gaps) pred.scd_gaps = *utt.scd_gaps;
  if (active.Contains(TaskId::kEndpoint) && utt.ep_gaps) pred.ep_gaps = *utt.ep_gaps;
  if (active.Contains(TaskId::kNer) && utt.spans) pred.spans = *utt.spans;
  return pred;
}

std::vector<int> TokenIds(std::span<const std::string> tokens, const TokenVocab &vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto &t : tokens) {
    auto id = vocab.Find(t);
    if (!id) ThrowRuntime("unknown token: " + t);
    ids.push_back(*id);
  }
  return ids;
}

std::string JoinTokens(std::span<const int> ids, const TokenVocab &vocab) {
  std::ostringstream os;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) os << ' ';
    os << vocab.ToString(ids[i]);
  }
  return os.str();
}

}  // namespace taskvec
