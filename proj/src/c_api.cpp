// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/odtq.h"

#include <exception>
#include <string>

#include "odtq/config.hpp"
#include "odtq/error.hpp"
#include "odtq/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

odtq_status status_of(const odtq::Error& e) {
  switch (e.code()) {
    case odtq::ErrorCode::kIo: return ODTQ_ERROR_IO;
    case odtq::ErrorCode::kParse: return ODTQ_ERROR_PARSE;
    case odtq::ErrorCode::kValidation: return ODTQ_ERROR_VALIDATION;
    case odtq::ErrorCode::kConfig: return ODTQ_ERROR_CONFIG;
    case odtq::ErrorCode::kDependency: return ODTQ_ERROR_DEPENDENCY;
    case odtq::ErrorCode::kContract: return ODTQ_ERROR_CONTRACT;
    case odtq::ErrorCode::kNumeric: return ODTQ_ERROR_NUMERIC;
    case odtq::ErrorCode::kInfeasible: return ODTQ_ERROR_INFEASIBLE;
  }
  return ODTQ_ERROR_INTERNAL;
}

template <class Fn>
odtq_status guarded(std::string* sink, Fn&& fn) {
  try {
    fn();
    if (sink) sink->clear();
    return ODTQ_OK;
  } catch (const odtq::Error& e) {
    if (sink) *sink = e.what();
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    if (sink) *sink = e.what();
    g_last_error = e.what();
    return ODTQ_ERROR_INTERNAL;
  } catch (...) {
    if (sink) *sink = "unknown error";
    g_last_error = "unknown error";
    return ODTQ_ERROR_INTERNAL;
  }
}

}  // namespace

struct odtq_pipeline {
  odtq::PipelineConfig config;
  std::string out_dir = "out";
  int threads = 1;
  std::string error;
};

extern "C" {

const char* odtq_version(void) { return "0.1.0"; }

odtq_status odtq_pipeline_create(const char* config_path, odtq_pipeline** out) {
  if (out == nullptr) return ODTQ_ERROR_CONTRACT;
  *out = nullptr;
  if (config_path == nullptr) {
    g_last_error = "config_path is null";
    return ODTQ_ERROR_CONTRACT;
  }
  auto* pipeline = new odtq_pipeline();
  odtq_status st = guarded(&pipeline->error, [&] {
    pipeline->config = odtq::parse_config(config_path);
  });
  if (st != ODTQ_OK) {
    delete pipeline;
    return st;
  }
  *out = pipeline;
  return ODTQ_OK;
}

void odtq_pipeline_destroy(odtq_pipeline* pipeline) { delete pipeline; }

odtq_status odtq_pipeline_set_output_dir(odtq_pipeline* pipeline, const char* dir) {
  if (pipeline == nullptr || dir == nullptr) return ODTQ_ERROR_CONTRACT;
  pipeline->out_dir = dir;
  return ODTQ_OK;
}

odtq_status odtq_pipeline_set_seed(odtq_pipeline* pipeline, uint64_t seed) {
  if (pipeline == nullptr) return ODTQ_ERROR_CONTRACT;
  pipeline->config.data.seed = seed;
  return ODTQ_OK;
}

odtq_status odtq_pipeline_set_threads(odtq_pipeline* pipeline, int threads) {
  if (pipeline == nullptr) return ODTQ_ERROR_CONTRACT;
  if (threads < 1) {
    pipeline->error = "threads must be >= 1";
    return ODTQ_ERROR_CONTRACT;
  }
  pipeline->threads = threads;
  return ODTQ_OK;
}

odtq_status odtq_pipeline_run_stage(odtq_pipeline* pipeline, const char* stage) {
  if (pipeline == nullptr || stage == nullptr) return ODTQ_ERROR_CONTRACT;
  return guarded(&pipeline->error, [&] {
    odtq::Stage s = odtq::parse_stage(stage);
    odtq::run_stage(pipeline->config, pipeline->out_dir, s, pipeline->threads);
  });
}

const char* odtq_pipeline_error(const odtq_pipeline* pipeline) {
  return pipeline == nullptr ? "" : pipeline->error.c_str();
}

const char* odtq_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
