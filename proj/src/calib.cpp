// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/calib.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "odtq/error.hpp"
#include "odtq/roadnet.hpp"  // format_float

namespace odtq::calib {

namespace {

constexpr double kLambdaCap = 1e6;

void check_data(const std::vector<IntervalEstimate>& estimates,
                const std::vector<double>& truths) {
  if (estimates.empty() || estimates.size() != truths.size())
    fail(ErrorCode::kContract, "calibration needs matched non-empty estimate/truth lists");
}

}  // namespace

double coverage_loss(const std::vector<IntervalEstimate>& estimates,
                     const std::vector<double>& truths, double lambda) {
  check_data(estimates, truths);
  size_t covered = 0;
  for (size_t i = 0; i < estimates.size(); ++i) {
    double lo = estimates[i].y_hat - lambda * estimates[i].sigma_l;
    double hi = estimates[i].y_hat + lambda * estimates[i].sigma_u;
    if (truths[i] >= lo && truths[i] <= hi) ++covered;
  }
  return 1.0 - static_cast<double>(covered) / static_cast<double>(estimates.size());
}

double hoeffding_ucb(double emp_loss, int calib_size, double delta) {
  if (calib_size < 1) fail(ErrorCode::kContract, "calibration size must be >= 1");
  if (delta <= 0.0 || delta >= 1.0) fail(ErrorCode::kContract, "delta must be in (0, 1)");
  if (emp_loss < 0.0 || emp_loss > 1.0)
    fail(ErrorCode::kContract, "empirical loss must be in [0, 1]");
  return emp_loss + std::sqrt(std::log(1.0 / delta) / (2.0 * calib_size));
}

std::vector<double> default_grid(double max, double step) {
  if (max <= 0.0 || step <= 0.0) fail(ErrorCode::kContract, "bad grid parameters");
  std::vector<double> grid;
  for (double v = 0.0; v <= max + step * 0.5; v += step) grid.push_back(v);
  return grid;
}

CalibrationResult fit_lambda(const std::vector<IntervalEstimate>& estimates,
                             const std::vector<double>& truths, double alpha,
                             double delta, const std::vector<double>& grid) {
  check_data(estimates, truths);
  if (alpha <= 0.0 || alpha >= 1.0) fail(ErrorCode::kContract, "alpha must be in (0, 1)");
  if (grid.empty() || grid.front() < 0.0)
    fail(ErrorCode::kContract, "grid must be non-empty and non-negative");
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      fail(ErrorCode::kContract, "grid must be strictly increasing");

  int calib_size = static_cast<int>(estimates.size());
  double slack = hoeffding_ucb(0.0, calib_size, delta);
  if (slack > alpha)
    fail(ErrorCode::kInfeasible,
         "alpha=" + format_float(alpha) + " is below the Hoeffding slack " +
             format_float(slack) + " at M=" + std::to_string(calib_size) +
             "; smallest achievable alpha is " + format_float(slack));

  CalibrationResult result;
  result.alpha = alpha;
  result.delta = delta;
  result.calib_size = calib_size;

  auto try_lambda = [&](double lambda) {
    double emp = coverage_loss(estimates, truths, lambda);
    double ucb = emp + slack;
    result.risk_curve.push_back({lambda, emp, ucb});
    return ucb <= alpha;
  };

  for (double lambda : grid) {
    if (try_lambda(lambda)) {
      result.lambda_hat = lambda;
      return result;
    }
  }

  // extend past the supplied grid, keeping its resolution, until the
  // empirical miscoverage hits zero or the cap is reached
  double step = grid.size() >= 2 ? grid.back() - grid[grid.size() - 2] : 0.01;
  double max = std::max(grid.back(), step);
  while (max < kLambdaCap) {
    double new_max = max * 2.0;
    for (double lambda = max + step; lambda <= new_max + step * 0.5; lambda += step) {
      if (try_lambda(lambda)) {
        result.lambda_hat = lambda;
        return result;
      }
    }
    max = new_max;
  }
  fail(ErrorCode::kInfeasible,
       "no lambda below " + format_float(kLambdaCap) +
           " meets the risk target; residual empirical miscoverage " +
           format_float(result.risk_curve.back().emp_loss) +
           " (degenerate zero-width intervals in the calibration set)");
}

std::pair<double, double> apply_calibration(const IntervalEstimate& estimate,
                                            const CalibrationResult& result) {
  return {estimate.y_hat - result.lambda_hat * estimate.sigma_l,
          estimate.y_hat + result.lambda_hat * estimate.sigma_u};
}

void save_calibration(const CalibrationResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << "{\"lambda_hat\": " << format_float(result.lambda_hat)
      << ", \"alpha\": " << format_float(result.alpha)
      << ", \"delta\": " << format_float(result.delta)
      << ", \"M\": " << result.calib_size << "}\n";
}

CalibrationResult load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CalibrationResult r;
  auto read_field = [&](const std::string& key) {
    auto pos = text.find("\"" + key + "\"");
    if (pos == std::string::npos)
      fail(ErrorCode::kParse, path + ": missing field '" + key + "'");
    pos = text.find(':', pos);
    if (pos == std::string::npos) fail(ErrorCode::kParse, path + ": malformed record");
    return std::stod(text.substr(pos + 1));
  };
  r.lambda_hat = read_field("lambda_hat");
  r.alpha = read_field("alpha");
  r.delta = read_field("delta");
  r.calib_size = static_cast<int>(read_field("M"));
  return r;
}

void save_risk_curve(const CalibrationResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << "lambda,emp_loss,ucb\n";
  for (const RiskPoint& p : result.risk_curve)
    out << format_float(p.lambda) << ',' << format_float(p.emp_loss) << ','
        << format_float(p.ucb) << "\n";
}

}  // namespace odtq::calib
