// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
#include "odtq/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "odtq/error.hpp"
#include "odtq/parallel.hpp"
#include "odtq/pathpolicy.hpp"

namespace fs = std::filesystem;

namespace odtq {

Stage parse_stage(const std::string& name) {
  if (name == "generate") return Stage::kGenerate;
  if (name == "train-path") return Stage::kTrainPath;
  if (name == "train-uq") return Stage::kTrainUq;
  if (name == "calibrate") return Stage::kCalibrate;
  if (name == "evaluate") return Stage::kEvaluate;
  if (name == "predict") return Stage::kPredict;
  fail(ErrorCode::kContract, "unknown stage '" + name + "'");
}

ArtifactPaths::ArtifactPaths(const std::string& dir) : out_dir(dir) {
  auto join = [&](const char* name) { return (fs::path(dir) / name).string(); };
  network = join("network.txt");
  trips = join("trips.txt");
  queries = join("queries.txt");
  splits = join("splits.txt");
  policy_ckpt = join("policy.ckpt");
  policy_log = join("train_path_log.csv");
  uq_ckpt = join("uq.ckpt");
  uq_log = join("train_uq_log.csv");
  calibration = join("calibration.json");
  risk_curve = join("risk_curve.csv");
  report = join("report.json");
  predictions = join("predictions.csv");
}

namespace {

void require_artifact(const std::string& path, const char* producer) {
  if (!fs::exists(path))
    fail(ErrorCode::kDependency, "missing artifact " + path + "; run '" +
                                     producer + "' first");
}

Dataset load_dataset_checked(const ArtifactPaths& paths) {
  require_artifact(paths.network, "generate");
  require_artifact(paths.trips, "generate");
  require_artifact(paths.queries, "generate");
  require_artifact(paths.splits, "generate");
  return load_dataset(paths.out_dir);
}

TripsIndex train_index(const Dataset& ds) {
  std::vector<Trip> train_trips;
  for (size_t i = 0; i < ds.trips.size(); ++i)
    if (ds.split[i] == Split::kTrain) train_trips.push_back(ds.trips[i]);
  return TripsIndex(ds.net, train_trips);
}

/// Greedy-decoded path per requested trip index; slots for other trips
/// stay empty.
std::vector<Path> decode_paths(const policy::PolicyModel& model, const Dataset& ds,
                               const TripsIndex& index, const PipelineConfig& cfg,
                               const std::vector<int>& indices, int threads) {
  std::vector<Path> paths(ds.trips.size());
  parallel_for(indices.size(), threads, [&](size_t k) {
    int i = indices[k];
    policy::Episode ep =
        policy::rollout(model, ds.net, index, cfg.data.slice_len, ds.queries[i],
                        nullptr, cfg.policy, policy::DecodeMode::kGreedy, nullptr, false);
    paths[i] = ep.predicted;
  });
  return paths;
}

std::vector<int> concat_indices(const Dataset& ds, std::initializer_list<Split> splits) {
  std::vector<int> out;
  for (Split s : splits) {
    auto idx = ds.indices_of(s);
    out.insert(out.end(), idx.begin(), idx.end());
  }
  return out;
}

void run_generate(const PipelineConfig& cfg, const ArtifactPaths& paths, int threads) {
  Dataset ds = build_dataset(cfg.data, threads);
  save_dataset(ds, paths.out_dir);
}

void run_train_path(const PipelineConfig& cfg, const ArtifactPaths& paths, int threads) {
  Dataset ds = load_dataset_checked(paths);
  policy::PolicyTrainResult result =
      policy::train_policy(ds, cfg.policy, cfg.data.slice_len,
                           mix_seed(cfg.data.seed, "train-path"), threads);
  result.best.save(paths.policy_ckpt);
  std::ofstream log(paths.policy_log);
  if (!log) fail(ErrorCode::kIo, "cannot write " + paths.policy_log);
  log << "epoch,ce_loss,policy_loss,val_mean_reward,val_lcs,val_dtw\n";
  for (const auto& r : result.log)
    log << r.epoch << ',' << format_float(r.ce_loss) << ','
        << format_float(r.policy_loss) << ',' << format_float(r.val_mean_reward) << ','
        << format_float(r.val_lcs) << ',' << format_float(r.val_dtw) << "\n";
}

std::vector<Path> encoding_paths(const PipelineConfig& cfg, const Dataset& ds,
                                 const TripsIndex& index, const ArtifactPaths& paths,
                                 const std::vector<int>& indices, int threads) {
  if (cfg.uq.path_mode == "truth") {
    std::vector<Path> out(ds.trips.size());
    for (int i : indices) out[i] = ds.trips[i].path();
    return out;
  }
  require_artifact(paths.policy_ckpt, "train-path");
  policy::PolicyModel model(grad::ParamStore::load(paths.policy_ckpt));
  return decode_paths(model, ds, index, cfg, indices, threads);
}

void run_train_uq(const PipelineConfig& cfg, const ArtifactPaths& paths, int threads) {
  Dataset ds = load_dataset_checked(paths);
  TripsIndex index = train_index(ds);
  std::vector<Path> enc = encoding_paths(cfg, ds, index, paths,
                                         concat_indices(ds, {Split::kTrain, Split::kVal}),
                                         threads);
  uq::UqTrainResult result =
      uq::train_uq(ds, enc, cfg.uq, cfg.data.slice_len, cfg.data.horizon,
                   mix_seed(cfg.data.seed, "train-uq"), threads);
  result.best.save(paths.uq_ckpt);
  std::ofstream log(paths.uq_log);
  if (!log) fail(ErrorCode::kIo, "cannot write " + paths.uq_log);
  log << "epoch,train_mis,val_mis\n";
  for (const auto& r : result.log)
    log << r.epoch << ',' << format_float(r.train_mis) << ','
        << format_float(r.val_mis) << "\n";
}

struct SplitPredictions {
  std::vector<uq::IntervalEstimate> estimates;
  std::vector<double> truths;
  std::vector<Path> paths;  // the UQ input path per position
};

SplitPredictions predict_split(const PipelineConfig& cfg, const Dataset& ds,
                               const TripsIndex& index, const uq::UqModel& model,
                               const ArtifactPaths& paths, Split split, int threads) {
  std::vector<int> idx = ds.indices_of(split);
  std::vector<Path> enc = encoding_paths(cfg, ds, index, paths, idx, threads);
  SplitPredictions out;
  out.estimates.resize(idx.size());
  out.truths.resize(idx.size());
  out.paths.resize(idx.size());
  parallel_for(idx.size(), threads, [&](size_t k) {
    int i = idx[k];
    out.estimates[k] =
        model.predict(ds.net, enc[i], ds.queries[i].departure, index);
    out.truths[k] = ds.trips[i].travel_time();
    out.paths[k] = enc[i];
  });
  return out;
}

void run_calibrate(const PipelineConfig& cfg, const ArtifactPaths& paths, int threads) {
  Dataset ds = load_dataset_checked(paths);
  require_artifact(paths.uq_ckpt, "train-uq");
  TripsIndex index = train_index(ds);
  uq::UqModel model(grad::ParamStore::load(paths.uq_ckpt));
  SplitPredictions calib_data =
      predict_split(cfg, ds, index, model, paths, Split::kCalib, threads);
  calib::CalibrationResult result = calib::fit_lambda(
      calib_data.estimates, calib_data.truths, cfg.calibration.alpha,
      cfg.calibration.delta,
      calib::default_grid(cfg.calibration.grid_max, cfg.calibration.grid_step));
  calib::save_calibration(result, paths.calibration);
  calib::save_risk_curve(result, paths.risk_curve);
}

void run_predict(const PipelineConfig& cfg, const ArtifactPaths& paths, int threads) {
  require_artifact(paths.network, "generate");
  require_artifact(paths.trips, "generate");
  require_artifact(paths.splits, "generate");
  require_artifact(paths.policy_ckpt, "train-path");
  require_artifact(paths.uq_ckpt, "train-uq");
  Dataset ds = load_dataset_checked(paths);
  TripsIndex index = train_index(ds);
  policy::PolicyModel path_model(grad::ParamStore::load(paths.policy_ckpt));
  uq::UqModel model(grad::ParamStore::load(paths.uq_ckpt));

  calib::CalibrationResult cal;
  cal.lambda_hat = 1.0;
  if (cfg.eval.apply_calibration) {
    require_artifact(paths.calibration, "calibrate");
    cal = calib::load_calibration(paths.calibration);
  }

  std::string qfile = cfg.eval.queries_file.empty() ? paths.queries : cfg.eval.queries_file;
  require_artifact(qfile, "generate");
  std::vector<OdtQuery> queries = load_queries(qfile);

  std::vector<uq::IntervalEstimate> estimates(queries.size());
  parallel_for(queries.size(), threads, [&](size_t k) {
    policy::Episode ep = policy::rollout(path_model, ds.net, index, cfg.data.slice_len,
                                         queries[k], nullptr, cfg.policy,
                                         policy::DecodeMode::kGreedy, nullptr, false);
    estimates[k] = model.predict(ds.net, ep.predicted, queries[k].departure, index);
  });

  std::ofstream out(paths.predictions);
  if (!out) fail(ErrorCode::kIo, "cannot write " + paths.predictions);
  out << "query_id,y_hat,lower,upper\n";
  for (size_t k = 0; k < queries.size(); ++k) {
    auto [lo, hi] = calib::apply_calibration(estimates[k], cal);
    out << queries[k].id << ',' << format_float(estimates[k].y_hat) << ','
        << format_float(lo) << ',' << format_float(hi) << "\n";
  }
}

}  // namespace

MetricsReport evaluate_pipeline(const PipelineConfig& cfg, const std::string& out_dir,
                                int threads) {
  ArtifactPaths paths(out_dir);
  Dataset ds = load_dataset_checked(paths);
  require_artifact(paths.uq_ckpt, "train-uq");
  require_artifact(paths.policy_ckpt, "train-path");
  TripsIndex index = train_index(ds);
  policy::PolicyModel path_model(grad::ParamStore::load(paths.policy_ckpt));
  uq::UqModel model(grad::ParamStore::load(paths.uq_ckpt));

  calib::CalibrationResult cal;
  cal.lambda_hat = 1.0;
  if (cfg.eval.apply_calibration) {
    require_artifact(paths.calibration, "calibrate");
    cal = calib::load_calibration(paths.calibration);
  }

  std::vector<int> test_idx = ds.indices_of(Split::kTest);
  if (test_idx.empty()) fail(ErrorCode::kContract, "empty test split");

  // interval inputs honor uq.path_mode; path metrics always grade the
  // deployed greedy decode against the ground truth
  SplitPredictions uq_preds =
      predict_split(cfg, ds, index, model, paths, Split::kTest, threads);
  std::vector<Path> decoded = decode_paths(path_model, ds, index, cfg, test_idx, threads);

  std::vector<double> y_hat(test_idx.size());
  std::vector<std::pair<double, double>> intervals(test_idx.size());
  double lcs_sum = 0.0, lcs_norm_sum = 0.0, dtw_sum = 0.0;
  for (size_t k = 0; k < test_idx.size(); ++k) {
    y_hat[k] = uq_preds.estimates[k].y_hat;
    intervals[k] = calib::apply_calibration(uq_preds.estimates[k], cal);
    Path truth = ds.trips[test_idx[k]].path();
    align::AlignmentScores s = align::score(decoded[test_idx[k]], truth, ds.net);
    lcs_sum += s.lcs_len;
    lcs_norm_sum += s.lcs_norm;
    dtw_sum += s.dtw_norm;
  }

  PointMetrics pm = compute_point_metrics(y_hat, uq_preds.truths);
  IntervalMetrics im = compute_interval_metrics(intervals, uq_preds.truths);

  MetricsReport report;
  report.rmse = pm.rmse;
  report.mae = pm.mae;
  report.mape = pm.mape;
  report.picp = im.picp;
  report.iw = im.iw;
  double n_test = static_cast<double>(test_idx.size());
  report.lcs_mean = lcs_sum / n_test;
  report.lcs_norm_mean = lcs_norm_sum / n_test;
  report.dtw_mean = dtw_sum / n_test;
  report.n_train = static_cast<int>(ds.indices_of(Split::kTrain).size());
  report.n_val = static_cast<int>(ds.indices_of(Split::kVal).size());
  report.n_calib = static_cast<int>(ds.indices_of(Split::kCalib).size());
  report.n_test = static_cast<int>(test_idx.size());
  report.calibration_applied = cfg.eval.apply_calibration;
  report.lambda_hat = cal.lambda_hat;
  report.config_digest = cfg.digest();
  report.seed = cfg.data.seed;

  std::ofstream out(paths.report);
  if (!out) fail(ErrorCode::kIo, "cannot write " + paths.report);
  out << report.to_json();
  return report;
}

void run_stage(const PipelineConfig& cfg, const std::string& out_dir, Stage stage,
               int threads) {
  cfg.validate();
  if (threads < 1) fail(ErrorCode::kContract, "threads must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  ArtifactPaths paths(out_dir);
  switch (stage) {
    case Stage::kGenerate: run_generate(cfg, paths, threads); break;
    case Stage::kTrainPath: run_train_path(cfg, paths, threads); break;
    case Stage::kTrainUq: run_train_uq(cfg, paths, threads); break;
    case Stage::kCalibrate: run_calibrate(cfg, paths, threads); break;
    case Stage::kEvaluate: evaluate_pipeline(cfg, out_dir, threads); break;
    case Stage::kPredict: run_predict(cfg, paths, threads); break;
  }
}

}  // namespace odtq
