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

/* C interface to libtaskvec.
 *
 * Every call returns a tv_status. On failure the message is available from
 * tv_last_error() on the same thread until the next failing call. Handles
 * are opaque and owned by the caller; free them with the matching *_free
 * function (NULL is accepted). Strings returned by the library stay valid
 * until the owning handle is freed.
 */
#ifndef TASKVEC_TASKVEC_H_
#define TASKVEC_TASKVEC_H_

#include <stddef.h>

#if defined(_WIN32)
#define TV_API __declspec(dllexport)
#else
#define TV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes. */
typedef enum tv_status {
  TV_OK = 0,
  TV_ERR_USAGE = 1,   /* bad arguments, unknown names, missing config */
  TV_ERR_RUNTIME = 2, /* I/O, malformed files, internal failures */
  TV_ERR_NUMERIC = 3  /* non-finite loss or gradient */
} tv_status;

typedef struct tv_corpus tv_corpus;
typedef struct tv_model tv_model;
typedef struct tv_report tv_report;

/* Receives one log line (no trailing newline). */
typedef void (*tv_log_fn)(const char *line, void *user);

TV_API const char *tv_version(void);
TV_API const char *tv_last_error(void);

/* Generates a synthetic corpus into out_dir. config_path may be NULL or ""
 * for the defaults. The corpus hash (16 hex digits) is copied into hash_out
 * when it is non-NULL and hash_len >= 17. */
TV_API tv_status tv_gen_data(const char *config_path, const char *out_dir, char *hash_out,
                             size_t hash_len);

TV_API tv_status tv_corpus_open(const char *dir, tv_corpus **out);
TV_API void tv_corpus_free(tv_corpus *corpus);
TV_API const char *tv_corpus_hash(const tv_corpus *corpus);
/* Number of utterances in a split ("train-full", "train-partial", "dev",
 * "test"), or -1 for an unknown split. */
TV_API long tv_corpus_split_size(const tv_corpus *corpus, const char *split);

/* Trains per the config file and writes best.ckpt and run.json to out_dir. */
TV_API tv_status tv_train(const char *config_path, const tv_corpus *corpus, const char *out_dir,
                          tv_log_fn log, void *user);

TV_API tv_status tv_model_load(const char *checkpoint_path, tv_model **out);
TV_API void tv_model_free(tv_model *model);
/* Strategy and position names of the loaded model. */
TV_API const char *tv_model_strategy(const tv_model *model);
TV_API const char *tv_model_position(const tv_model *model);

/* Decodes a split with the comma separated task list active (ASR implicit)
 * and writes the hypothesis file. beam <= 1 selects greedy search. */
TV_API tv_status tv_decode(const tv_model *model, const tv_corpus *corpus, const char *split,
                           const char *tasks, int beam, const char *hyp_path);

/* Scores a hypothesis file. When out_dir is non-NULL and non-empty, writes
 * report.txt and metrics.txt there. */
TV_API tv_status tv_eval(const char *hyp_path, const tv_corpus *corpus, const char *split,
                         const char *tasks, const char *out_dir, tv_report **out);
TV_API void tv_report_free(tv_report *report);
TV_API const char *tv_report_text(const tv_report *report);
/* Flat key=value lines; keys are stable across runs. */
TV_API const char *tv_report_metrics(const tv_report *report);
/* Value for one key, or NULL when absent. Inactive task metrics read "--". */
TV_API const char *tv_report_get(const tv_report *report, const char *key);

/* Strategy x position ablation. With dry_run set, logs the planned runs
 * and returns without training. Tables are logged and written to out_dir. */
TV_API tv_status tv_ablate(const char *config_path, const tv_corpus *corpus, const char *out_dir,
                           int dry_run, tv_log_fn log, void *user);

#ifdef __cplusplus
}
#endif

#endif /* TASKVEC_TASKVEC_H_ */
