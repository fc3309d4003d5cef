// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>

#include "odtq/calib.hpp"
#include "odtq/config.hpp"
#include "odtq/metrics.hpp"

namespace odtq {

enum class Stage {
  kGenerate,
  kTrainPath,
  kTrainUq,
  kCalibrate,
  kEvaluate,
  kPredict,
};

Stage parse_stage(const std::string& name);

/// Fixed artifact layout inside the output directory. Stages communicate
/// through these files only, so any stage can be rerun in isolation.
struct ArtifactPaths {
  explicit ArtifactPaths(const std::string& out_dir);
  std::string out_dir;
  std::string network, trips, queries, splits;
  std::string policy_ckpt, policy_log;
  std::string uq_ckpt, uq_log;
  std::string calibration, risk_curve;
  std::string report;
  std::string predictions;
};

/// Runs one stage against the artifacts in out_dir. Missing upstream
/// artifacts raise kDependency errors naming the file. Deterministic for a
/// fixed config (threads only parallelize order-independent work).
void run_stage(const PipelineConfig& cfg, const std::string& out_dir, Stage stage,
               int threads = 1);

/// evaluate-stage result (also written to report.json)
MetricsReport evaluate_pipeline(const PipelineConfig& cfg, const std::string& out_dir,
                                int threads = 1);

}  // namespace odtq
