// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace odtq {

struct PointMetrics {
  double rmse = 0.0;  // seconds
  double mae = 0.0;   // seconds
  double mape = 0.0;  // percent
};

PointMetrics compute_point_metrics(const std::vector<double>& preds,
                                   const std::vector<double>& truths);

struct IntervalMetrics {
  double picp = 0.0;  // percent of truths inside [l, u], closed
  double iw = 0.0;    // mean interval width, seconds
};

IntervalMetrics compute_interval_metrics(
    const std::vector<std::pair<double, double>>& intervals,
    const std::vector<double>& truths);

struct MetricsReport {
  double rmse = 0.0, mae = 0.0, mape = 0.0;
  double picp = 0.0, iw = 0.0;
  double lcs_mean = 0.0;       // raw common-node count
  double lcs_norm_mean = 0.0;  // fraction of the true path
  double dtw_mean = 0.0;       // normalized units
  int n_train = 0, n_val = 0, n_calib = 0, n_test = 0;
  bool calibration_applied = false;
  double lambda_hat = 1.0;
  std::string config_digest;
  unsigned long long seed = 0;

  // stable key order; byte-identical for identical inputs
  std::string to_json() const;
};

}  // namespace odtq
