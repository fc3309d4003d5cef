// Copyright (c) 2026 odtq contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end; links the shared library through the C API only.
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "odtq/odtq.h"

int main(int argc, char** argv) {
  CLI::App app{"origin-destination travel-time intervals with a statistical guarantee"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;

  const char* stages[] = {"generate", "train-path", "train-uq",
                          "calibrate", "evaluate",   "predict"};
  const char* descriptions[] = {
      "build the synthetic dataset",
      "train the path-prediction policy",
      "train the travel-time interval model",
      "fit the interval scaling factor on the calibration split",
      "compute test metrics and write report.json",
      "emit intervals for a queries file"};
  for (int i = 0; i < 6; ++i) {
    CLI::App* sub = app.add_subcommand(stages[i], descriptions[i]);
    sub->add_option("--config", config_path, "pipeline config file")->required();
    sub->add_option("--out", out_dir, "artifact directory (default: out)");
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", threads, "worker threads (default: 1)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  odtq_pipeline* pipeline = nullptr;
  odtq_status st = odtq_pipeline_create(config_path.c_str(), &pipeline);
  if (st != ODTQ_OK) {
    std::fprintf(stderr, "odtq: %s\n", odtq_last_error());
    return static_cast<int>(st);
  }
  odtq_pipeline_set_output_dir(pipeline, out_dir.c_str());
  if (seed_set) odtq_pipeline_set_seed(pipeline, seed);
  st = odtq_pipeline_set_threads(pipeline, threads);
  if (st == ODTQ_OK) st = odtq_pipeline_run_stage(pipeline, stage.c_str());
  if (st != ODTQ_OK) {
    std::fprintf(stderr, "odtq %s: %s\n", stage.c_str(), odtq_pipeline_error(pipeline));
    odtq_pipeline_destroy(pipeline);
    return static_cast<int>(st);
  }
  std::printf("odtq %s: done (artifacts in %s)\n", stage.c_str(), out_dir.c_str());
  odtq_pipeline_destroy(pipeline);
  return 0;
}
