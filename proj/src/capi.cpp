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

#include "taskvec/taskvec.h"

#include <cstring>
#include <exception>
#include <map>
#include <new>
#include <string>

#include "taskvec/error.hpp"
#include "taskvec/experiment.hpp"

struct tv_corpus {
  taskvec::CorpusFiles files;
  taskvec::TokenVocab vocab;
};

struct tv_model {
  taskvec::Checkpoint ckpt;
  std::string strategy, position;
};

struct tv_report {
  taskvec::MetricReport report;
  std::string text, metrics;
  std::map<std::string, std::string> values;
};

namespace {

thread_local std::string g_last_error;

tv_status Fail(tv_status s, const std::string &msg) {
  g_last_error = msg;
  return s;
}

// Runs fn and translates exceptions into status codes.
template <typename Fn>
tv_status Guard(Fn &&fn) {
  try {
    fn();
    return TV_OK;
  } catch (const taskvec::Error &e) {
    return Fail(static_cast<tv_status>(e.kind()), e.what());
  } catch (const std::bad_alloc &) {
    return Fail(TV_ERR_RUNTIME, "out of memory");
  } catch (const std::exception &e) {
    return Fail(TV_ERR_RUNTIME, e.what());
  } catch (...) {
    return Fail(TV_ERR_RUNTIME, "unknown error");
  }
}

std::string Str(const char *s) { return s ? s : ""; }

void Require(const void *p, const char *what) {
  if (!p) taskvec::ThrowUsage(std::string(what) + " must not be NULL");
}

taskvec::TrainLogger Logger(tv_log_fn log, void *user) {
  if (!log) return {};
  return [log, user](const std::string &line) {
    std::string l = line;
    while (!l.empty() && l.back() == '\n') l.pop_back();
    log(l.c_str(), user);
  };
}

}  // namespace

extern "C" {

const char *tv_version(void) { return "0.1.0"; }

const char *tv_last_error(void) { return g_last_error.c_str(); }

tv_status tv_gen_data(const char *config_path, const char *out_dir, char *hash_out,
                      size_t hash_len) {
  return Guard([&] {
    Require(out_dir, "out_dir");
    const taskvec::GenConfig cfg = taskvec::LoadGenConfig(Str(config_path));
    const std::string hash = taskvec::WriteCorpus(taskvec::GenerateCorpus(cfg), cfg, out_dir);
    if (hash_out && hash_len > hash.size()) std::memcpy(hash_out, hash.c_str(), hash.size() + 1);
  });
}

tv_status tv_corpus_open(const char *dir, tv_corpus **out) {
  return Guard([&] {
    Require(dir, "dir");
    Require(out, "out");
    *out = nullptr;
    auto c = std::make_unique<tv_corpus>();
    c->files = taskvec::ReadCorpus(dir);
    c->vocab = taskvec::TokenVocab::Build(c->files.corpus.codec);
    *out = c.release();
  });
}

void tv_corpus_free(tv_corpus *corpus) { delete corpus; }

const char *tv_corpus_hash(const tv_corpus *corpus) {
  return corpus ? corpus->files.hash.c_str() : "";
}

long tv_corpus_split_size(const tv_corpus *corpus, const char *split) {
  if (!corpus || !split) return -1;
  try {
    return static_cast<long>(corpus->files.corpus.split(taskvec::ParseSplit(split)).size());
  } catch (...) {
    return -1;
  }
}

tv_status tv_train(const char *config_path, const tv_corpus *corpus, const char *out_dir,
                   tv_log_fn log, void *user) {
  return Guard([&] {
    Require(corpus, "corpus");
    Require(out_dir, "out_dir");
    const taskvec::TrainConfig cfg = taskvec::LoadTrainConfig(Str(config_path));
    taskvec::Train(cfg, corpus->files, out_dir, Logger(log, user));
  });
}

tv_status tv_model_load(const char *checkpoint_path, tv_model **out) {
  return Guard([&] {
    Require(checkpoint_path, "checkpoint_path");
    Require(out, "out");
    *out = nullptr;
    if (!std::filesystem::exists(checkpoint_path))
      taskvec::ThrowUsage(std::string("checkpoint not found: ") + checkpoint_path);
    auto m = std::make_unique<tv_model>(tv_model{taskvec::LoadCheckpoint(checkpoint_path), {}, {}});
    m->strategy = taskvec::ToString(m->ckpt.model.config().strategy);
    m->position = taskvec::ToString(m->ckpt.model.config().position);
    *out = m.release();
  });
}

void tv_model_free(tv_model *model) { delete model; }

const char *tv_model_strategy(const tv_model *model) {
  return model ? model->strategy.c_str() : "";
}

const char *tv_model_position(const tv_model *model) {
  return model ? model->position.c_str() : "";
}

tv_status tv_decode(const tv_model *model, const tv_corpus *corpus, const char *split,
                    const char *tasks, int beam, const char *hyp_path) {
  return Guard([&] {
    Require(model, "model");
    Require(corpus, "corpus");
    Require(split, "split");
    Require(hyp_path, "hyp_path");
    const auto &utts = corpus->files.corpus.split(taskvec::ParseSplit(split));
    const taskvec::TaskSet set = taskvec::TaskSet::Parse(Str(tasks));
    taskvec::WriteHypotheses(hyp_path, taskvec::DecodeSplit(model->ckpt.model, corpus->vocab,
                                                            utts, set, beam < 1 ? 1 : beam));
  });
}

tv_status tv_eval(const char *hyp_path, const tv_corpus *corpus, const char *split,
                  const char *tasks, const char *out_dir, tv_report **out) {
  return Guard([&] {
    Require(hyp_path, "hyp_path");
    Require(corpus, "corpus");
    Require(split, "split");
    const auto &utts = corpus->files.corpus.split(taskvec::ParseSplit(split));
    const taskvec::TaskSet set = taskvec::TaskSet::Parse(Str(tasks));
    const auto hyps = taskvec::ReadHypotheses(hyp_path);
    auto r = std::make_unique<tv_report>();
    r->report = taskvec::EvaluateHypotheses(hyps, utts, set, corpus->vocab);
    r->text = r->report.ToText();
    r->metrics = taskvec::FormatKeyValues(r->report);
    for (auto &[k, v] : r->report.KeyValues()) r->values[k] = v;
    if (out_dir && *out_dir) taskvec::WriteReport(r->report, out_dir);
    if (out) *out = r.release();
  });
}

void tv_report_free(tv_report *report) { delete report; }

const char *tv_report_text(const tv_report *report) { return report ? report->text.c_str() : ""; }

const char *tv_report_metrics(const tv_report *report) {
  return report ? report->metrics.c_str() : "";
}

const char *tv_report_get(const tv_report *report, const char *key) {
  if (!report || !key) return nullptr;
  auto it = report->values.find(key);
  return it == report->values.end() ? nullptr : it->second.c_str();
}

tv_status tv_ablate(const char *config_path, const tv_corpus *corpus, const char *out_dir,
                    int dry_run, tv_log_fn log, void *user) {
  return Guard([&] {
    Require(corpus, "corpus");
    Require(out_dir, "out_dir");
    const taskvec::AblationConfig cfg = taskvec::LoadAblationConfig(Str(config_path));
    const auto logger = Logger(log, user);
    if (dry_run) {
      if (logger) logger(taskvec::PlanAblation(cfg));
      return;
    }
    taskvec::RunAblation(cfg, corpus->files, out_dir, logger);
  });
}

}  // extern "C"
