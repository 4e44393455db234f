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

#include "taskvec/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "taskvec/error.hpp"

namespace taskvec {

WerResult Wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  return Wer<std::string>(ref, hyp);
}

std::vector<AlignedPair> AlignTokens(std::span<const std::string> ref,
                                     std::span<const std::string> hyp) {
  return Align<std::string>(ref, hyp);
}

double PrfCounts::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double PrfCounts::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double PrfCounts::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

PrfCounts &PrfCounts::operator+=(const PrfCounts &o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

PrfCounts TokenF1(std::span<const std::string> ref, std::span<const std::string> hyp,
                  const std::set<std::string> &task_tokens) {
  PrfCounts c;
  for (const auto &t : ref) c.fn += task_tokens.count(t);
  for (const auto &t : hyp) c.fp += task_tokens.count(t);
  for (const AlignedPair &p : AlignTokens(ref, hyp)) {
    if (p.op == EditOp::kMatch && task_tokens.count(ref[p.ref])) {
      ++c.tp;
      --c.fn;
      --c.fp;
    }
  }
  return c;
}

std::vector<SurfaceSpan> SurfaceSpans(const std::vector<EntitySpan> &spans,
                                      std::span<const std::string> words) {
  std::vector<SurfaceSpan> out;
  for (const EntitySpan &s : spans) {
    if (s.begin < 0 || s.end > static_cast<int>(words.size()) || s.begin >= s.end)
      ThrowRuntime("entity span out of word bounds");
    std::string surface;
    for (int i = s.begin; i < s.end; ++i) {
      if (i > s.begin) surface += ' ';
      surface += words[i];
    }
    out.emplace_back(s.type, std::move(surface));
  }
  return out;
}

PrfCounts NerF1(std::span<const SurfaceSpan> ref, std::span<const SurfaceSpan> hyp) {
  std::multiset<SurfaceSpan> pool(ref.begin(), ref.end());
  PrfCounts c;
  for (const auto &h : hyp) {
    auto it = pool.find(h);
    if (it != pool.end()) {
      ++c.tp;
      pool.erase(it);
    } else {
      ++c.fp;
    }
  }
  c.fn = static_cast<int64_t>(pool.size());
  return c;
}

double LidAccuracy(std::span<const std::string> refs,
                   std::span<const std::optional<std::string>> hyps) {
  if (refs.size() != hyps.size()) ThrowRuntime("lid accuracy: size mismatch");
  if (refs.empty()) return 0.0;
  size_t correct = 0;
  for (size_t i = 0; i < refs.size(); ++i) correct += hyps[i] && *hyps[i] == refs[i];
  return static_cast<double>(correct) / static_cast<double>(refs.size());
}

int64_t IttCount(std::span<const int> hyp, TaskSet active, const TokenVocab &vocab) {
  int64_t n = 0;
  for (int id : hyp) {
    if (id < 0 || id >= vocab.size()) continue;
    const auto task = vocab.TaskOf(id);
    if (task && !active.Contains(*task)) ++n;
  }
  return n;
}

double MetricReport::MacroWer() const {
  if (wer_by_language.empty()) return wer.wer;
  double sum = 0.0;
  for (const auto &[lang, w] : wer_by_language) sum += w.wer;
  return sum / static_cast<double>(wer_by_language.size());
}

std::string FormatMetric(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> MetricReport::KeyValues() const {
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("tasks", tasks.ToString());
  kv.emplace_back("utterances", std::to_string(utterances));
  kv.emplace_back("wer", FormatMetric(wer.wer));
  kv.emplace_back("wer.sub", std::to_string(wer.substitutions));
  kv.emplace_back("wer.ins", std::to_string(wer.insertions));
  kv.emplace_back("wer.del", std::to_string(wer.deletions));
  kv.emplace_back("wer.ref_words", std::to_string(wer.ref_length));
  kv.emplace_back("wer.macro", FormatMetric(MacroWer()));
  for (const auto &[lang, w] : wer_by_language) kv.emplace_back("wer." + lang, FormatMetric(w.wer));
  auto prf = [&kv](const std::string &name, const std::optional<PrfCounts> &c) {
    kv.emplace_back(name + ".precision", c ? FormatMetric(c->precision()) : "--");
    kv.emplace_back(name + ".recall", c ? FormatMetric(c->recall()) : "--");
    kv.emplace_back(name + ".f1", c ? FormatMetric(c->f1()) : "--");
  };
  prf("scd", scd);
  prf("endpoint", endpoint);
  prf("ner", ner);
  kv.emplace_back("lid.accuracy", lid_accuracy ? FormatMetric(*lid_accuracy) : "--");
  kv.emplace_back("itt", std::to_string(itt));
  kv.emplace_back("malformed", std::to_string(malformed));
  return kv;
}

std::string MetricReport::ToText() const {
  std::ostringstream os;
  os << "tasks        " << tasks.ToString() << "\n";
  os << "utterances   " << utterances << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "WER          %6.2f%%  (S=%lld I=%lld D=%lld N=%lld)\n",
                100.0 * wer.wer, static_cast<long long>(wer.substitutions),
                static_cast<long long>(wer.insertions), static_cast<long long>(wer.deletions),
                static_cast<long long>(wer.ref_length));
  os << buf;
  for (const auto &[lang, w] : wer_by_language) {
    std::snprintf(buf, sizeof(buf), "  WER[%s]%*s%6.2f%%\n", lang.c_str(),
                  static_cast<int>(std::max<size_t>(1, 5 - std::min<size_t>(5, lang.size()))), "",
                  100.0 * w.wer);
    os << buf;
  }
  auto prf = [&](const char *name, const std::optional<PrfCounts> &c) {
    if (!c) {
      std::snprintf(buf, sizeof(buf), "%-12s --\n", name);
    } else {
      std::snprintf(buf, sizeof(buf), "%-12s P=%.4f R=%.4f F1=%.4f\n", name, c->precision(),
                    c->recall(), c->f1());
    }
    os << buf;
  };
  prf("SCD", scd);
  prf("Endpoint", endpoint);
  prf("NER", ner);
  if (lid_accuracy) {
    std::snprintf(buf, sizeof(buf), "LID          acc=%.4f\n", *lid_accuracy);
  } else {
    std::snprintf(buf, sizeof(buf), "LID          --\n");
  }
  os << buf;
  os << "ITT          " << itt << "\n";
  os << "malformed    " << malformed << "\n";
  return os.str();
}

MetricReport Evaluate(std::span<const AnnotatedUtterance> refs,
                      std::span<const std::vector<int>> hyps, TaskSet active,
                      const TokenVocab &vocab) {
  if (refs.size() != hyps.size())
    ThrowRuntime("evaluate: " + std::to_string(hyps.size()) + " hypotheses for " +
                 std::to_string(refs.size()) + " references");
  MetricReport r;
  r.tasks = active;
  r.utterances = static_cast<int64_t>(refs.size());
  if (active.Contains(TaskId::kScd)) r.scd.emplace();
  if (active.Contains(TaskId::kEndpoint)) r.endpoint.emplace();
  if (active.Contains(TaskId::kNer)) r.ner.emplace();
  const std::set<std::string> scd_set = {vocab.ToString(vocab.scd_id())};
  const std::set<std::string> ep_set = {vocab.ToString(vocab.ep_id())};
  std::vector<std::string> lid_refs;
  std::vector<std::optional<std::string>> lid_hyps;

  for (size_t i = 0; i < refs.size(); ++i) {
    const AnnotatedUtterance &ref = refs[i];
    if (!active.IsSubsetOf(ref.available))
      ThrowRuntime("evaluate: utterance " + ref.id + " lacks annotations for " +
                   active.ToString());
    const TaskPredictions pred = ParseHypothesis(hyps[i], vocab);
    r.malformed += pred.malformed;
    r.itt += IttCount(hyps[i], active, vocab);

    const WerResult w = Wer(std::span<const std::string>(ref.words),
                            std::span<const std::string>(pred.words));
    auto accumulate = [&w](WerResult &acc) {
      acc.substitutions += w.substitutions;
      acc.insertions += w.insertions;
      acc.deletions += w.deletions;
      acc.ref_length += w.ref_length;
    };
    accumulate(r.wer);
    accumulate(r.wer_by_language[ref.language.value_or("unknown")]);

    if (r.scd || r.endpoint) {
      std::vector<std::string> ref_tokens, hyp_tokens;
      for (int id : EncodeReference(ref, active, vocab)) ref_tokens.push_back(vocab.ToString(id));
      for (int id : hyps[i])
        hyp_tokens.push_back(id >= 0 && id < vocab.size() ? vocab.ToString(id) : "<invalid>");
      if (r.scd) *r.scd += TokenF1(ref_tokens, hyp_tokens, scd_set);
      if (r.endpoint) *r.endpoint += TokenF1(ref_tokens, hyp_tokens, ep_set);
    }
    if (r.ner) {
      const auto ref_spans = SurfaceSpans(*ref.spans, ref.words);
      const auto hyp_spans = SurfaceSpans(pred.spans, pred.words);
      *r.ner += NerF1(ref_spans, hyp_spans);
    }
    if (active.Contains(TaskId::kLid)) {
      lid_refs.push_back(*ref.language);
      lid_hyps.push_back(pred.language);
    }
  }
  auto finish = [](WerResult &w) {
    if (w.ref_length > 0) {
      w.wer = static_cast<double>(w.errors()) / static_cast<double>(w.ref_length);
    } else {
      w.wer = w.insertions == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
  };
  finish(r.wer);
  for (auto &[lang, w] : r.wer_by_language) finish(w);
  if (active.Contains(TaskId::kLid)) r.lid_accuracy = LidAccuracy(lid_refs, lid_hyps);
  return r;
}

}  // namespace taskvec
