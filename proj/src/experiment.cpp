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

#include "taskvec/experiment.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "taskvec/error.hpp"

namespace taskvec {

namespace fs = std::filesystem;
using nlohmann::json;

void WriteHypotheses(const fs::path &path, const std::vector<HypothesisLine> &lines) {
  std::string text;
  for (const HypothesisLine &l : lines) {
    if (l.id.find_first_of("\t\n") != std::string::npos)
      ThrowRuntime("hypothesis id contains a tab or newline: " + l.id);
    text += l.id;
    text += '\t';
    for (size_t i = 0; i < l.tokens.size(); ++i) {
      if (i) text += ' ';
      text += l.tokens[i];
    }
    text += '\n';
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  WriteTextFile(path, text);
}

std::vector<HypothesisLine> ReadHypotheses(const fs::path &path) {
  if (!fs::exists(path)) ThrowUsage("hypothesis file not found: " + path.string());
  std::istringstream in(ReadTextFile(path));
  std::vector<HypothesisLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      ThrowRuntime(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>tokens");
    HypothesisLine h;
    h.id = line.substr(0, tab);
    std::istringstream toks(line.substr(tab + 1));
    for (std::string t; toks >> t;) h.tokens.push_back(std::move(t));
    out.push_back(std::move(h));
  }
  if (out.empty()) ThrowRuntime("hypothesis file is empty: " + path.string());
  return out;
}

namespace {

json LoadConfigJson(const fs::path &path) {
  if (path.empty()) return json::object();
  if (!fs::exists(path)) ThrowUsage("config file not found: " + path.string());
  try {
    return json::parse(ReadTextFile(path));
  } catch (const json::parse_error &e) {
    ThrowUsage("config " + path.string() + ": " + e.what());
  }
}

}  // namespace

GenConfig LoadGenConfig(const fs::path &path) {
  GenConfig c;
  from_json(LoadConfigJson(path), c);
  c.Validate();
  return c;
}

TrainConfig LoadTrainConfig(const fs::path &path) {
  TrainConfig c;
  from_json(LoadConfigJson(path), c);
  c.Validate();
  return c;
}

std::vector<HypothesisLine> DecodeSplit(const TransducerModel &model, const TokenVocab &vocab,
                                        const std::vector<AnnotatedUtterance> &utts, TaskSet tasks,
                                        int beam, int threads) {
  if (beam < 1) ThrowUsage("beam must be >= 1");
  if (model.vocab_size() != vocab.size())
    ThrowRuntime("checkpoint vocabulary (" + std::to_string(model.vocab_size()) +
                 ") does not match the corpus (" + std::to_string(vocab.size()) + ")");
  if (tasks.bits() >> (model.config().num_aux + 1))
    ThrowUsage("task set {" + tasks.ToString() + "} is not known to the checkpoint");
  const auto ids = DecodeUtterances(model, utts, tasks, beam, 8, threads);
  std::vector<HypothesisLine> out(utts.size());
  for (size_t i = 0; i < utts.size(); ++i) {
    out[i].id = utts[i].id;
    for (int id : ids[i]) out[i].tokens.push_back(vocab.ToString(id));
  }
  return out;
}

MetricReport EvaluateHypotheses(const std::vector<HypothesisLine> &hyps,
                                const std::vector<AnnotatedUtterance> &utts, TaskSet tasks,
                                const TokenVocab &vocab) {
  std::unordered_map<std::string, const HypothesisLine *> by_id;
  for (const HypothesisLine &h : hyps)
    if (!by_id.emplace(h.id, &h).second) ThrowRuntime("duplicate hypothesis for " + h.id);
  if (by_id.size() != utts.size())
    ThrowRuntime("hypothesis file has " + std::to_string(by_id.size()) + " utterances, split has " +
                 std::to_string(utts.size()));
  std::vector<std::vector<int>> ids;
  ids.reserve(utts.size());
  for (const AnnotatedUtterance &u : utts) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) ThrowRuntime("no hypothesis for utterance " + u.id);
    ids.push_back(TokenIds(it->second->tokens, vocab));
  }
  return Evaluate(utts, ids, tasks, vocab);
}

std::string FormatKeyValues(const MetricReport &report) {
  std::string out;
  for (const auto &[k, v] : report.KeyValues()) out += k + "=" + v + "\n";
  return out;
}

void WriteReport(const MetricReport &report, const fs::path &dir) {
  fs::create_directories(dir);
  WriteTextFile(dir / "report.txt", report.ToText());
  WriteTextFile(dir / "metrics.txt", FormatKeyValues(report));
}

AblationConfig LoadAblationConfig(const fs::path &path) {
  const json j = LoadConfigJson(path);
  static const char *kKeys[] = {"train", "beam", "split", "strategies", "positions"};
  for (const auto &[k, v] : j.items())
    if (std::find(std::begin(kKeys), std::end(kKeys), k) == std::end(kKeys))
      ThrowUsage("ablation config: unknown key \"" + k + "\"");
  AblationConfig c;
  try {
    if (j.contains("train")) from_json(j.at("train"), c.train);
    if (j.contains("beam")) c.beam = j.at("beam").get<int>();
    if (j.contains("split")) c.split = ParseSplit(j.at("split").get<std::string>());
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto &s : j.at("strategies")) c.strategies.push_back(ParseStrategy(s.get<std::string>()));
    }
    if (j.contains("positions")) {
      c.positions.clear();
      for (const auto &p : j.at("positions")) c.positions.push_back(ParsePosition(p.get<std::string>()));
    }
  } catch (const json::exception &e) {
    ThrowUsage(std::string("ablation config: ") + e.what());
  }
  c.train.Validate();
  if (c.beam < 1) ThrowUsage("ablation config: beam must be >= 1");
  if (c.strategies.empty() || c.positions.empty())
    ThrowUsage("ablation config: empty strategy or position list");
  return c;
}

std::string RunName(ActivationStrategy s, ActivationPosition p) {
  return std::string(ToString(s)) + "__" + std::string(ToString(p));
}

std::string PlanAblation(const AblationConfig &config) {
  std::ostringstream os;
  int n = 0;
  for (ActivationStrategy s : config.strategies)
    for (ActivationPosition p : config.positions)
      os << "train " << ++n << ": " << RunName(s, p) << "  (" << config.train.epochs
         << " epochs, seed " << config.train.seed << ")\n";
  for (ActivationStrategy s : config.strategies)
    os << "subsets: " << ToString(s) << " at its best position, " << (1 << kNumAuxTasks)
       << " task sets on " << SplitName(config.split) << ", beam " << config.beam << "\n";
  return os.str();
}

namespace {

std::string Percent(const std::optional<PrfCounts> &c) {
  if (!c) return "--";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * c->f1());
  return buf;
}

std::string Cell(const std::string &s, int width) {
  return s.size() >= static_cast<size_t>(width) ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string Header(const char *first, int first_width, bool itt) {
  std::string h = Cell(first, first_width) + Cell("WER", 8) + Cell("SCD F1", 8) +
                  Cell("EP F1", 8) + Cell("NER F1", 8) + Cell("LID acc", 8);
  if (itt) h += "ITT";
  while (!h.empty() && h.back() == ' ') h.pop_back();
  return h + "\n";
}

std::string MetricCells(const MetricReport &r) {
  char wer[16], lid[16];
  std::snprintf(wer, sizeof(wer), "%.1f", 100.0 * r.wer.wer);
  if (r.lid_accuracy) {
    std::snprintf(lid, sizeof(lid), "%.1f", 100.0 * *r.lid_accuracy);
  } else {
    std::snprintf(lid, sizeof(lid), "--");
  }
  return Cell(wer, 8) + Cell(Percent(r.scd), 8) + Cell(Percent(r.endpoint), 8) +
         Cell(Percent(r.ner), 8) + Cell(lid, 8);
}

std::string Rule(size_t width) { return std::string(width, '-') + "\n"; }

std::string Pretty(ActivationPosition p) {
  switch (p) {
    case ActivationPosition::kAfterFeatureEncoder: return "After feature encoder";
    case ActivationPosition::kAfterFullEncoder: return "After full encoder";
    case ActivationPosition::kBoth: return "After both";
  }
  return "?";
}

std::string Pretty(ActivationStrategy s) {
  return s == ActivationStrategy::kPerCombination ? "Each task combination has a learnable vector"
                                                  : "Each task has a learnable vector";
}

std::string PrettyTasks(TaskSet t) {
  static const char *kNames[] = {"ASR", "SCD", "Endpoint", "NER", "LID"};
  std::string out;
  for (int b = 0; b <= kNumAuxTasks; ++b) {
    if (!t.ContainsBit(b)) continue;
    if (!out.empty()) out += " + ";
    out += kNames[b];
  }
  return out;
}

}  // namespace

std::string FormatTable1(const std::vector<AblationRun> &runs) {
  constexpr int kFirst = 26;
  const std::string header = Header("Model (all tasks active)", kFirst, false);
  std::string out = header + Rule(header.size() - 1);
  std::optional<ActivationStrategy> current;
  for (const AblationRun &r : runs) {
    if (!current || *current != r.strategy) {
      if (current) out += Rule(header.size() - 1);
      out += Pretty(r.strategy) + "\n";
      current = r.strategy;
    }
    std::string row = Cell("  " + Pretty(r.position), kFirst) + MetricCells(r.all_tasks);
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row + "\n";
  }
  return out;
}

std::string FormatTable3(const std::vector<AblationSubset> &input) {
  constexpr int kFirst = 36;
  // Rows grouped by strategy (first appearance), then by subset size.
  std::vector<AblationSubset> subsets = input;
  std::vector<ActivationStrategy> order;
  for (const auto &s : subsets)
    if (std::find(order.begin(), order.end(), s.strategy) == order.end()) order.push_back(s.strategy);
  auto rank = [&](ActivationStrategy s) { return std::find(order.begin(), order.end(), s) - order.begin(); };
  std::stable_sort(subsets.begin(), subsets.end(), [&](const AblationSubset &a, const AblationSubset &b) {
    if (a.strategy != b.strategy) return rank(a.strategy) < rank(b.strategy);
    return a.report.tasks.NumAux() < b.report.tasks.NumAux();
  });
  const std::string header = Header("Activated tasks", kFirst, true);
  std::string out = header;
  static const char *kGroups[] = {"Single task", "One auxiliary task", "Two auxiliary tasks",
                                  "Three auxiliary tasks", "All tasks"};
  std::optional<ActivationStrategy> strategy;
  for (size_t i = 0; i < subsets.size(); ++i) {
    const AblationSubset &s = subsets[i];
    if (!strategy || *strategy != s.strategy) {
      out += Rule(header.size() - 1);
      std::string where = Pretty(s.position);
      where[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(where[0])));
      out += Pretty(s.strategy) + ", added " + where + "\n";
      strategy = s.strategy;
    }
    const int n = s.report.tasks.NumAux();
    if (i == 0 || subsets[i - 1].strategy != s.strategy ||
        subsets[i - 1].report.tasks.NumAux() != n) {
      out += Rule(header.size() - 1);
      out += std::string(kGroups[std::min(n, 4)]) + "\n";
    }
    // No task is inactive when every task is on, so ITT is undefined there.
    const bool all = s.report.tasks == TaskSet::All();
    std::string row = Cell("  " + PrettyTasks(s.report.tasks), kFirst) + MetricCells(s.report) +
                      (all ? "--" : std::to_string(s.report.itt));
    out += row + "\n";
  }
  return out;
}

namespace {

json ReportJson(const MetricReport &r) {
  json j = json::object();
  for (const auto &[k, v] : r.KeyValues()) j[k] = v;
  return j;
}

}  // namespace

AblationResult RunAblation(const AblationConfig &config, const CorpusFiles &corpus,
                           const fs::path &out_dir, const TrainLogger &log) {
  const TokenVocab vocab = TokenVocab::Build(corpus.corpus.codec);
  const auto &eval_utts = corpus.corpus.split(config.split);
  if (eval_utts.empty()) ThrowUsage("ablation: evaluation split is empty");
  fs::create_directories(out_dir);
  AblationResult result;
  std::map<ActivationStrategy, std::pair<double, TransducerModel *>> best;
  std::vector<TransducerModel> models;
  models.reserve(config.strategies.size() * config.positions.size());

  for (ActivationStrategy s : config.strategies) {
    for (ActivationPosition p : config.positions) {
      TrainConfig tc = config.train;
      tc.strategy = s;
      tc.position = p;
      AblationRun run{s, p, RunName(s, p), 0.0, 0, {}};
      if (log) log("== " + run.dir);
      TrainResult tr = Train(tc, corpus, out_dir / run.dir, log);
      run.best_dev_wer = tr.manifest.best_dev_wer;
      run.best_epoch = tr.manifest.best_epoch;
      models.push_back(std::move(tr.best_model));
      const auto hyps =
          DecodeSplit(models.back(), vocab, eval_utts, TaskSet::All(), config.beam, tc.threads);
      WriteHypotheses(out_dir / run.dir / "hyp_all.txt", hyps);
      run.all_tasks = EvaluateHypotheses(hyps, eval_utts, TaskSet::All(), vocab);
      auto it = best.find(s);
      if (it == best.end() || run.best_dev_wer < it->second.first)
        best[s] = {run.best_dev_wer, &models.back()};
      result.runs.push_back(std::move(run));
    }
  }
  result.table1 = FormatTable1(result.runs);
  if (log) log(result.table1);

  // Subsets ordered by size, then by combination index within a size.
  std::vector<uint32_t> masks;
  for (uint32_t m = 0; m < (1u << kNumAuxTasks); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](uint32_t a, uint32_t b) {
    return std::popcount(a) < std::popcount(b);
  });
  for (ActivationStrategy s : config.strategies) {
    const TransducerModel &model = *best.at(s).second;
    const ActivationPosition pos = model.config().position;
    for (uint32_t m : masks) {
      const TaskSet tasks = TaskSet::FromAuxMask(m);
      const auto hyps = DecodeSplit(model, vocab, eval_utts, tasks, config.beam, config.train.threads);
      result.subsets.push_back({s, pos, EvaluateHypotheses(hyps, eval_utts, tasks, vocab)});
      if (log) log("subset " + RunName(s, pos) + " {" + tasks.ToString() + "} done");
    }
  }
  result.table3 = FormatTable3(result.subsets);
  if (log) log(result.table3);

  json j;
  j["split"] = SplitName(config.split);
  j["beam"] = config.beam;
  j["corpus_hash"] = corpus.hash;
  for (const AblationRun &r : result.runs)
    j["runs"].push_back({{"strategy", ToString(r.strategy)},
                         {"position", ToString(r.position)},
                         {"dir", r.dir},
                         {"best_epoch", r.best_epoch},
                         {"best_dev_wer", r.best_dev_wer},
                         {"all_tasks", ReportJson(r.all_tasks)}});
  for (const AblationSubset &s : result.subsets)
    j["subsets"].push_back({{"strategy", ToString(s.strategy)},
                            {"position", ToString(s.position)},
                            {"metrics", ReportJson(s.report)}});
  WriteTextFile(out_dir / "table1.txt", result.table1);
  WriteTextFile(out_dir / "table3.txt", result.table3);
  WriteTextFile(out_dir / "ablation.json", j.dump(2) + "\n");
  return result;
}

}  // namespace taskvec
