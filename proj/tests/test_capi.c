/* Copyright 2026 The taskvec Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Exercises the C interface from C. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "taskvec/taskvec.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: failed: %s (%s)\n", __FILE__, __LINE__, #cond, tv_last_error()); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static void WriteFile(const char *path, const char *text) {
  FILE *f = fopen(path, "w");
  if (!f) {
    perror(path);
    exit(2);
  }
  fputs(text, f);
  fclose(f);
}

static void Quiet(const char *line, void *user) {
  (void)line;
  ++*(int *)user;
}

int main(int argc, char **argv) {
  const char *root = argc > 1 ? argv[1] : "capi_test_out";
  char gen[512], corpus_dir[512], train_cfg[512], run[512], ckpt[512], hyp[512], hyp_asr[512],
      report_dir[512], hash[32], hash2[32];
  snprintf(gen, sizeof gen, "%s/gen.json", root);
  snprintf(corpus_dir, sizeof corpus_dir, "%s/corpus", root);
  snprintf(train_cfg, sizeof train_cfg, "%s/train.json", root);
  snprintf(run, sizeof run, "%s/run", root);
  snprintf(ckpt, sizeof ckpt, "%s/run/best.ckpt", root);
  snprintf(hyp, sizeof hyp, "%s/hyp.txt", root);
  snprintf(hyp_asr, sizeof hyp_asr, "%s/hyp_asr.txt", root);
  snprintf(report_dir, sizeof report_dir, "%s/report", root);

  EXPECT(strlen(tv_version()) > 0);
  EXPECT(tv_gen_data("/nonexistent/gen.json", corpus_dir, NULL, 0) == TV_ERR_USAGE);
  EXPECT(strstr(tv_last_error(), "not found") != NULL);

  WriteFile(gen, "{\"train_utterances\": 16, \"dev_utterances\": 4, \"test_utterances\": 4}");
  EXPECT(tv_gen_data(gen, corpus_dir, hash, sizeof hash) == TV_OK);
  EXPECT(strlen(hash) == 16);
  EXPECT(tv_gen_data(gen, corpus_dir, hash2, sizeof hash2) == TV_OK);
  EXPECT(strcmp(hash, hash2) == 0);

  tv_corpus *corpus = NULL;
  EXPECT(tv_corpus_open("/nonexistent", &corpus) == TV_ERR_USAGE);
  EXPECT(corpus == NULL);
  EXPECT(tv_corpus_open(corpus_dir, &corpus) == TV_OK);
  EXPECT(strcmp(tv_corpus_hash(corpus), hash) == 0);
  EXPECT(tv_corpus_split_size(corpus, "train-full") == 8);
  EXPECT(tv_corpus_split_size(corpus, "test") == 4);
  EXPECT(tv_corpus_split_size(corpus, "nope") == -1);

  WriteFile(train_cfg, "{\"epochs\": 1, \"embed_dim\": 8, \"pred_hidden\": 8, \"joint_dim\": 8}");
  int lines = 0;
  EXPECT(tv_train(train_cfg, corpus, run, Quiet, &lines) == TV_OK);
  EXPECT(lines == 1);
  EXPECT(tv_train(train_cfg, NULL, run, NULL, NULL) == TV_ERR_USAGE);

  tv_model *model = NULL;
  EXPECT(tv_model_load(ckpt, &model) == TV_OK);
  EXPECT(strcmp(tv_model_strategy(model), "per_combination") == 0);
  EXPECT(strcmp(tv_model_position(model), "after_feature_encoder") == 0);
  EXPECT(tv_decode(model, corpus, "test", "bogus", 1, hyp) == TV_ERR_USAGE);
  EXPECT(tv_decode(model, corpus, "test", "scd,endpoint,ner,lid", 4, hyp) == TV_OK);
  EXPECT(tv_decode(model, corpus, "test", "asr", 1, hyp_asr) == TV_OK);

  tv_report *report = NULL;
  EXPECT(tv_eval(hyp, corpus, "test", "scd,endpoint,ner,lid", report_dir, &report) == TV_OK);
  EXPECT(tv_report_get(report, "wer") != NULL);
  EXPECT(strcmp(tv_report_get(report, "utterances"), "4") == 0);
  EXPECT(strcmp(tv_report_get(report, "itt"), "0") == 0);
  EXPECT(tv_report_get(report, "no.such.key") == NULL);
  EXPECT(strstr(tv_report_text(report), "WER") != NULL);
  tv_report_free(report);

  report = NULL;
  EXPECT(tv_eval(hyp_asr, corpus, "test", "asr", NULL, &report) == TV_OK);
  EXPECT(strcmp(tv_report_get(report, "scd.f1"), "--") == 0);
  EXPECT(strcmp(tv_report_get(report, "lid.accuracy"), "--") == 0);
  tv_report_free(report);

  /* Partial split has no SCD annotations. */
  EXPECT(tv_eval(hyp, corpus, "train-partial", "scd", NULL, NULL) == TV_ERR_RUNTIME);

  lines = 0;
  EXPECT(tv_ablate(NULL, corpus, run, 1, Quiet, &lines) == TV_OK);
  EXPECT(lines == 1);

  tv_model_free(model);
  tv_corpus_free(corpus);
  tv_model_free(NULL);
  tv_corpus_free(NULL);
  tv_report_free(NULL);
  if (failures) fprintf(stderr, "%d failure(s)\n", failures);
  return failures ? 1 : 0;
}
