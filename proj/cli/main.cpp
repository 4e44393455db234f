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

// taskvec command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "taskvec/taskvec.h"

namespace {

namespace fs = std::filesystem;

// Relative output paths land under $TASKVEC_OUT_ROOT when it is set.
std::string OutPath(const std::string &p) {
  const char *root = std::getenv("TASKVEC_OUT_ROOT");
  if (!root || !*root || fs::path(p).is_absolute()) return p;
  return (fs::path(root) / p).string();
}

void PrintLine(const char *line, void *) {
  std::cout << line << '\n' << std::flush;
}

int Report(tv_status s) {
  if (s != TV_OK) std::cerr << "taskvec: error: " << tv_last_error() << '\n';
  return static_cast<int>(s);
}

struct CorpusDeleter {
  void operator()(tv_corpus *c) const { tv_corpus_free(c); }
};
struct ModelDeleter {
  void operator()(tv_model *m) const { tv_model_free(m); }
};
struct ReportDeleter {
  void operator()(tv_report *r) const { tv_report_free(r); }
};
using CorpusPtr = std::unique_ptr<tv_corpus, CorpusDeleter>;

tv_status OpenCorpus(const std::string &dir, CorpusPtr &out) {
  tv_corpus *c = nullptr;
  const tv_status s = tv_corpus_open(dir.c_str(), &c);
  out.reset(c);
  return s;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multitask transducer with dynamic task activation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tv_version()));

  std::string config, corpus_dir, out, checkpoint, split = "test", tasks, hyp;
  int beam = 4;
  bool dry_run = false;

  CLI::App *gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen->add_option("--config", config, "Generator config (JSON)")->required();
  gen->add_option("--out", out, "Output corpus directory")->required();

  CLI::App *train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config, "Training config (JSON)")->required();
  train->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  train->add_option("--out", out, "Run directory (best.ckpt, run.json)")->required();

  CLI::App *decode = app.add_subcommand("decode", "Decode a split with a task subset active");
  decode->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  decode->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  decode->add_option("--split", split, "train-full, train-partial, dev or test")
      ->capture_default_str();
  decode->add_option("--tasks", tasks, "Comma separated tasks; ASR is implicit")->required();
  decode->add_option("--beam", beam, "Beam size; 1 is greedy")->capture_default_str();
  decode->add_option("--out", out, "Hypothesis file")->required();

  CLI::App *eval = app.add_subcommand("eval", "Score a hypothesis file");
  eval->add_option("--hyp", hyp, "Hypothesis file")->required();
  eval->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  eval->add_option("--split", split, "Reference split")->capture_default_str();
  eval->add_option("--tasks", tasks, "Comma separated tasks; ASR is implicit")->required();
  eval->add_option("--out", out, "Directory for report.txt and metrics.txt");

  CLI::App *ablate = app.add_subcommand("ablate", "Strategy x position ablation");
  ablate->add_option("--config", config, "Ablation config (JSON)");
  ablate->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  ablate->add_option("--out", out, "Output directory")->required();
  ablate->add_flag("--dry-run", dry_run, "List planned runs without training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*gen) {
    char hash[32] = {0};
    const tv_status s = tv_gen_data(config.c_str(), OutPath(out).c_str(), hash, sizeof(hash));
    if (s == TV_OK) std::cout << "corpus " << OutPath(out) << " hash " << hash << '\n';
    return Report(s);
  }

  CorpusPtr corpus;
  if (tv_status s = OpenCorpus(corpus_dir, corpus); s != TV_OK) return Report(s);

  if (*train) {
    return Report(tv_train(config.c_str(), corpus.get(), OutPath(out).c_str(), PrintLine, nullptr));
  }
  if (*decode) {
    tv_model *raw = nullptr;
    if (tv_status s = tv_model_load(checkpoint.c_str(), &raw); s != TV_OK) return Report(s);
    std::unique_ptr<tv_model, ModelDeleter> model(raw);
    return Report(tv_decode(model.get(), corpus.get(), split.c_str(), tasks.c_str(), beam,
                            OutPath(out).c_str()));
  }
  if (*eval) {
    tv_report *raw = nullptr;
    const std::string dir = out.empty() ? "" : OutPath(out);
    const tv_status s = tv_eval(hyp.c_str(), corpus.get(), split.c_str(), tasks.c_str(),
                                dir.c_str(), &raw);
    std::unique_ptr<tv_report, ReportDeleter> report(raw);
    if (s == TV_OK) std::cout << tv_report_text(report.get());
    return Report(s);
  }
  if (*ablate) {
    return Report(tv_ablate(config.c_str(), corpus.get(), OutPath(out).c_str(), dry_run ? 1 : 0,
                            PrintLine, nullptr));
  }
  return 1;
}
