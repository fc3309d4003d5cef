/* Copyright (c) 2026 odtq contributors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C API of the odtq shared library. The pipeline handle wraps a parsed
 * config plus run options; stages exchange data through files in the
 * output directory, so processes can resume at any stage.
 */
#ifndef ODTQ_H
#define ODTQ_H

#include <stdint.h>

#if defined(_WIN32)
#define ODTQ_API __declspec(dllexport)
#else
#define ODTQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum odtq_status {
  ODTQ_OK = 0,
  ODTQ_ERROR_IO = 1,
  ODTQ_ERROR_PARSE = 2,
  ODTQ_ERROR_VALIDATION = 3,
  ODTQ_ERROR_CONFIG = 4,
  ODTQ_ERROR_DEPENDENCY = 5,
  ODTQ_ERROR_CONTRACT = 6,
  ODTQ_ERROR_NUMERIC = 7,
  ODTQ_ERROR_INFEASIBLE = 8,
  ODTQ_ERROR_INTERNAL = 9
} odtq_status;

typedef struct odtq_pipeline odtq_pipeline;

ODTQ_API const char* odtq_version(void);

/* Parses the config file; *out receives the handle on success. */
ODTQ_API odtq_status odtq_pipeline_create(const char* config_path, odtq_pipeline** out);
ODTQ_API void odtq_pipeline_destroy(odtq_pipeline* pipeline);

ODTQ_API odtq_status odtq_pipeline_set_output_dir(odtq_pipeline* pipeline,
                                                  const char* dir);
/* Overrides the config seed. */
ODTQ_API odtq_status odtq_pipeline_set_seed(odtq_pipeline* pipeline, uint64_t seed);
ODTQ_API odtq_status odtq_pipeline_set_threads(odtq_pipeline* pipeline, int threads);

/* stage: generate | train-path | train-uq | calibrate | evaluate | predict */
ODTQ_API odtq_status odtq_pipeline_run_stage(odtq_pipeline* pipeline,
                                             const char* stage);

/* Last error message of this handle; empty string when none. */
ODTQ_API const char* odtq_pipeline_error(const odtq_pipeline* pipeline);

/* Thread-local message for failures without a handle (e.g. create). */
ODTQ_API const char* odtq_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* ODTQ_H */
