// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "odtq/uqmoe.hpp"

namespace odtq::calib {

using uq::IntervalEstimate;

struct RiskPoint {
  double lambda = 0.0;
  double emp_loss = 0.0;  // empirical miscoverage at this lambda
  double ucb = 0.0;       // emp_loss + Hoeffding slack
};

struct CalibrationResult {
  double lambda_hat = 0.0;
  double alpha = 0.0;  // risk level
  double delta = 0.0;  // error level
  int calib_size = 0;  // M
  std::vector<RiskPoint> risk_curve;  // scanned grid up to the crossing
};

/// Fraction of truths outside [y_hat - lambda*sigma_l, y_hat + lambda*sigma_u]
/// (closed endpoints). Non-increasing in lambda.
double coverage_loss(const std::vector<IntervalEstimate>& estimates,
                     const std::vector<double>& truths, double lambda);

/// emp_loss + sqrt(log(1/delta) / (2M)): with probability >= 1 - delta the
/// true expected miscoverage is below this bound.
double hoeffding_ucb(double emp_loss, int calib_size, double delta);

/// Smallest grid lambda whose bounded risk is <= alpha. Because the
/// empirical miscoverage is non-increasing in lambda, the "all larger
/// lambda also satisfy the bound" condition reduces to the first grid
/// crossing. The grid extends itself by doubling its maximum until the
/// crossing is found (hard cap 1e6). Throws kInfeasible when alpha is
/// below the Hoeffding slack, i.e. unreachable even at full coverage.
CalibrationResult fit_lambda(const std::vector<IntervalEstimate>& estimates,
                             const std::vector<double>& truths, double alpha,
                             double delta, const std::vector<double>& grid);

std::vector<double> default_grid(double max = 4.0, double step = 0.01);

/// [y_hat - lambda_hat*sigma_l, y_hat + lambda_hat*sigma_u]
std::pair<double, double> apply_calibration(const IntervalEstimate& estimate,
                                            const CalibrationResult& result);

void save_calibration(const CalibrationResult& result, const std::string& path);
CalibrationResult load_calibration(const std::string& path);
void save_risk_curve(const CalibrationResult& result, const std::string& path);

}  // namespace odtq::calib
