// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "odtq/pathpolicy.hpp"
#include "odtq/synthgen.hpp"
#include "odtq/uqmoe.hpp"

namespace odtq {

struct CalibConfig {
  double alpha = 0.1;
  double delta = 0.1;
  double grid_max = 4.0;
  double grid_step = 0.01;

  void validate() const;
};

struct EvalConfig {
  bool apply_calibration = true;
  std::string queries_file;  // predict-stage input; dataset queries when empty
};

struct PipelineConfig {
  GeneratorConfig data;
  policy::PolicyConfig policy;
  uq::UqConfig uq;
  CalibConfig calibration;
  EvalConfig eval;

  void validate() const;
  // every key in a fixed order; input of the digest
  std::string canonical() const;
  std::string digest() const;  // fnv1a-64 hex of canonical()
};

/// Sectioned key=value file ([data], [policy], [uq], [calibration],
/// [eval]); unknown sections or keys are errors. Every field above has a
/// default, so an empty file is a valid config.
PipelineConfig parse_config(const std::string& path);

}  // namespace odtq
