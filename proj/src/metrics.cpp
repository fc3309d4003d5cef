// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/metrics.hpp"

#include <cmath>

#include <json.hpp>

#include "odtq/error.hpp"

namespace odtq {

PointMetrics compute_point_metrics(const std::vector<double>& preds,
                                   const std::vector<double>& truths) {
  if (preds.empty() || preds.size() != truths.size())
    fail(ErrorCode::kContract, "point metrics need matched non-empty lists");
  double se = 0.0, ae = 0.0, ape = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (truths[i] <= 0.0)
      fail(ErrorCode::kContract, "MAPE undefined for non-positive truth at index " +
                                     std::to_string(i));
    double err = preds[i] - truths[i];
    se += err * err;
    ae += std::abs(err);
    ape += std::abs(err) / truths[i];
  }
  double n = static_cast<double>(preds.size());
  return {std::sqrt(se / n), ae / n, 100.0 * ape / n};
}

IntervalMetrics compute_interval_metrics(
    const std::vector<std::pair<double, double>>& intervals,
    const std::vector<double>& truths) {
  if (intervals.empty() || intervals.size() != truths.size())
    fail(ErrorCode::kContract, "interval metrics need matched non-empty lists");
  size_t covered = 0;
  double width = 0.0;
  for (size_t i = 0; i < intervals.size(); ++i) {
    auto [lo, hi] = intervals[i];
    if (hi < lo)
      fail(ErrorCode::kContract, "crossed interval at index " + std::to_string(i));
    if (truths[i] >= lo && truths[i] <= hi) ++covered;
    width += hi - lo;
  }
  double n = static_cast<double>(intervals.size());
  return {100.0 * static_cast<double>(covered) / n, width / n};
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["rmse"] = rmse;
  j["mae"] = mae;
  j["mape"] = mape;
  j["picp"] = picp;
  j["iw"] = iw;
  j["lcs_mean"] = lcs_mean;
  j["lcs_norm_mean"] = lcs_norm_mean;
  j["dtw_mean"] = dtw_mean;
  j["n_train"] = n_train;
  j["n_val"] = n_val;
  j["n_calib"] = n_calib;
  j["n_test"] = n_test;
  j["calibration_applied"] = calibration_applied;
  j["lambda_hat"] = lambda_hat;
  j["config_digest"] = config_digest;
  j["seed"] = seed;
  return j.dump(2) + "\n";
}

}  // namespace odtq
