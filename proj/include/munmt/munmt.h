/*
 * Copyright 2026 The munmt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MUNMT_MUNMT_H
#define MUNMT_MUNMT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define MUNMT_API __attribute__((visibility("default")))
#else
#define MUNMT_API
#endif

/* Status codes double as CLI exit codes. */
typedef enum munmt_status {
  MUNMT_OK = 0,
  MUNMT_ERR_INTERNAL = 1,
  MUNMT_ERR_CONFIG = 2,
  MUNMT_ERR_DATA = 3,
  MUNMT_ERR_NUMERIC = 4,
  MUNMT_ERR_IO = 5
} munmt_status;

typedef struct munmt_session munmt_session;

/* Log lines are passed to the callback when one is set and the session is not
 * quiet. The string is only valid during the call. */
typedef void (*munmt_log_fn)(const char* line, void* user);

MUNMT_API const char* munmt_version(void);

MUNMT_API munmt_status munmt_session_create(munmt_session** out);
MUNMT_API void munmt_session_destroy(munmt_session* s);

/* Message of the last failed call on this session; "" after success. */
MUNMT_API const char* munmt_session_last_error(const munmt_session* s);

/* An empty or NULL path uses the built-in defaults. */
MUNMT_API munmt_status munmt_session_set_config(munmt_session* s, const char* path);
MUNMT_API munmt_status munmt_session_set_out(munmt_session* s, const char* dir);
MUNMT_API munmt_status munmt_session_set_seed(munmt_session* s, unsigned long long seed);
/* Dotted KEY=VALUE; VALUE is JSON when it parses as JSON, else a string. */
MUNMT_API munmt_status munmt_session_add_override(munmt_session* s, const char* key_value);
MUNMT_API munmt_status munmt_session_set_quiet(munmt_session* s, int quiet);
MUNMT_API munmt_status munmt_session_set_logger(munmt_session* s, munmt_log_fn fn, void* user);

/* Command options: "round" (1|2), "checkpoint" (path), "arm". */
MUNMT_API munmt_status munmt_session_set_option(munmt_session* s, const char* name,
                                                const char* value);

/* Commands: synth-data, train-vocab, stage1, synth-bt, stage2, stage3,
 * evaluate, pipeline, ablate. */
MUNMT_API munmt_status munmt_session_run(munmt_session* s, const char* command);

/* Final report of the last evaluate/pipeline/ablate run as TSV; "" if none. */
MUNMT_API const char* munmt_session_report_tsv(const munmt_session* s);

/* Corpus BLEU over n newline-free sentences. tokenize: 0 whitespace
 * (pre-tokenized), 1 sacreBLEU 13a. */
MUNMT_API munmt_status munmt_bleu(const char* const* hyps, const char* const* refs, size_t n,
                                  int tokenize, double* score);

#ifdef __cplusplus
}
#endif

#endif /* MUNMT_MUNMT_H */
