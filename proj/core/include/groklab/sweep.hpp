// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groklab/config.hpp"
#include "groklab/train.hpp"

namespace groklab {

struct RunSummary {
  uint64_t seed = 0;
  std::optional<int> grok_epoch;
  double peak_test_acc = 0.0;
  bool diverged = false;
  double wall_time_seconds = 0.0;
  std::string run_dir;
};

/// Mean/std/min/max grok epoch over grokked seeds (Failures excluded from
/// the epoch statistics), plus failure count and peak accuracies.
struct SweepAggregate {
  int n_runs = 0;
  int failures = 0;  // seeds that never crossed the grok threshold
  int diverged = 0;
  std::optional<double> grok_mean, grok_std, grok_min, grok_max;
  double mean_peak_acc = 0.0;
  double max_peak_acc = 0.0;
};

/// Executes one seed of an experiment: builds the dataset (split seed =
/// run seed), trains, and writes config.json + summary.json into run_dir.
RunSummary run_single(const ExperimentConfig& cfg, uint64_t seed,
                      const std::string& run_dir, bool use_f64 = false);

/// All seeds of an experiment with a bounded worker pool. Writes
/// aggregate.json and table.txt under cfg.output_dir (when set) or out_dir.
struct SweepResult {
  std::vector<RunSummary> runs;
  SweepAggregate aggregate;
};
SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                      int jobs = 1, bool use_f64 = false);

SweepAggregate aggregate_runs(const std::vector<RunSummary>& runs);
nlohmann::json summary_json(const ExperimentConfig& cfg,
                            const RunSummary& run);
nlohmann::json aggregate_json(const ExperimentConfig& cfg,
                              const SweepResult& result);
std::string aggregate_table(const ExperimentConfig& cfg,
                            const SweepResult& result);
RunSummary load_run_summary(const std::string& summary_path);

}  // namespace groklab
