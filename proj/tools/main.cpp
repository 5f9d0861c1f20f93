// SPDX-License-Identifier: Apache-2.0
//
// Reproduction driver: single runs, multi-seed sweeps, spectral analysis,
// accuracy plots and dataset dumps, all driven by JSON config files.
// Exit codes: 0 success, 1 usage/config error, 2 divergence, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "groklab/analysis.hpp"
#include "groklab/checkpoint.hpp"
#include "groklab/config.hpp"
#include "groklab/plot.hpp"
#include "groklab/sweep.hpp"

namespace fs = std::filesystem;
using namespace groklab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitIo = 3;

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::vector<uint64_t> seeds;
  bool force = false;
  bool f64 = false;
  int jobs = 1;
};

ExperimentConfig load_and_override(const CommonOpts& opts) {
  ExperimentConfig cfg = load_experiment_config(opts.config_path);
  if (!opts.seeds.empty()) cfg.seeds = opts.seeds;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (cfg.output_dir.empty()) {
    throw ConfigError("no output directory (set output_dir or pass --out)");
  }
  return cfg;
}

void check_output_dir(const std::string& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw ConfigError("output directory '" + dir +
                      "' already exists and is not empty (use --force)");
  }
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

int cmd_run(const CommonOpts& opts) {
  ExperimentConfig cfg = load_and_override(opts);
  check_output_dir(cfg.output_dir, opts.force);
  bool any_diverged = false;
  for (uint64_t seed : cfg.seeds) {
    std::string run_dir = cfg.output_dir + "/seed_" + std::to_string(seed);
    RunSummary s = run_single(cfg, seed, run_dir, opts.f64);
    std::cout << "seed " << seed << ": "
              << (s.diverged ? "DIVERGED"
                  : s.grok_epoch
                      ? ("grokked at epoch " + std::to_string(*s.grok_epoch))
                      : "no grok")
              << ", peak test acc " << s.peak_test_acc * 100.0 << "%\n";
    any_diverged |= s.diverged;
  }
  return any_diverged ? kExitDivergence : kExitOk;
}

int cmd_sweep(const CommonOpts& opts) {
  ExperimentConfig cfg = load_and_override(opts);
  check_output_dir(cfg.output_dir, opts.force);
  SweepResult result = run_sweep(cfg, cfg.output_dir, opts.jobs, opts.f64);
  std::cout << aggregate_table(cfg, result);
  return kExitOk;
}

int cmd_analyze(const std::string& checkpoint_path,
                const std::string& config_path, const std::string& out_path) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (cfg.task.kind != TaskKind::ModAdd) {
    throw ConfigError(
        "analyze: spectral analysis supports the modular-addition task only");
  }
  if (!fs::exists(checkpoint_path)) {
    throw IoError("checkpoint not found: " + checkpoint_path);
  }
  Params<double> params = load_checkpoint<double>(checkpoint_path, cfg.model);
  TaskDataset ds = cfg.task.build(cfg.seeds.front());
  SpectralReport rep =
      spectral_report(params, cfg.model, ds, 5, cfg.train.grok_threshold);
  std::string json = spectral_report_json(rep);
  if (!out_path.empty()) {
    write_file(out_path, json);
    // Full spectrum alongside the report.
    Tensor<double> wl = effective_logit_map(params, cfg.model);
    fs::path spectrum = fs::path(out_path).parent_path() / "spectrum.csv";
    write_file(spectrum.string(), spectrum_csv(wl));
  } else {
    std::cout << json;
  }
  if (!rep.grokked) {
    std::cerr << "note: model below grok threshold (test acc "
              << rep.plain_accuracy * 100.0 << "%); report flagged\n";
  }
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& run_dirs,
             const std::string& out_dir) {
  std::vector<RunSeries> series;
  for (const auto& dir : run_dirs) {
    std::string csv = dir + "/metrics.csv";
    if (!fs::exists(csv)) {
      std::cerr << "warning: " << csv << " missing, skipped\n";
      continue;
    }
    RunSeries s =
        load_accuracy_series(csv, fs::path(dir).filename().string());
    if (s.points.empty()) {
      std::cerr << "warning: " << csv << " has no rows, skipped\n";
      continue;
    }
    series.push_back(std::move(s));
  }
  if (series.empty()) {
    std::cerr << "warning: nothing to plot\n";
    return kExitOk;
  }
  fs::create_directories(out_dir);
  write_file(out_dir + "/accuracy_full.svg",
             accuracy_svg(series, std::nullopt, "Test accuracy"));
  write_file(out_dir + "/accuracy_early.svg",
             accuracy_svg(series, 5000, "Test accuracy (first 5,000 epochs)"));
  write_file(out_dir + "/accuracy.csv", combined_accuracy_csv(series));
  return kExitOk;
}

int cmd_dump_dataset(const std::string& config_path,
                     const std::string& out_path) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  TaskDataset ds = cfg.task.build(cfg.seeds.front());
  write_file(out_path, dataset_csv(ds));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"groklab: architectural-intervention grokking experiments"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", opts.config_path, "experiment config JSON")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory override");
    sub->add_option("--seeds", opts.seeds, "seed list override")
        ->delimiter(',');
    sub->add_flag("--force", opts.force, "allow overwriting an existing "
                                         "output directory");
    sub->add_flag("--f64", opts.f64, "train in 64-bit precision");
    if (with_jobs) {
      sub->add_option("--jobs", opts.jobs, "parallel runs")->default_val(1);
    }
  };

  CLI::App* run = app.add_subcommand("run", "train the configured seeds");
  add_common(run, false);

  CLI::App* sweep =
      app.add_subcommand("sweep", "train all seeds and aggregate");
  add_common(sweep, true);

  std::string checkpoint_path, analyze_config, analyze_out;
  CLI::App* analyze =
      app.add_subcommand("analyze", "spectral report for a checkpoint");
  analyze->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  analyze->add_option("--config", analyze_config, "experiment config JSON")
      ->required();
  analyze->add_option("--out", analyze_out, "report JSON path");

  std::vector<std::string> plot_dirs;
  std::string plot_out;
  CLI::App* plot = app.add_subcommand("plot", "accuracy SVG overlays");
  plot->add_option("dirs", plot_dirs, "run directories with metrics.csv")
      ->required();
  plot->add_option("--out", plot_out, "output directory")->required();

  std::string dump_config, dump_out;
  CLI::App* dump = app.add_subcommand("dump-dataset", "dataset CSV dump");
  dump->add_option("--config", dump_config, "experiment config JSON")
      ->required();
  dump->add_option("--out", dump_out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(opts);
    if (sweep->parsed()) return cmd_sweep(opts);
    if (analyze->parsed()) {
      return cmd_analyze(checkpoint_path, analyze_config, analyze_out);
    }
    if (plot->parsed()) return cmd_plot(plot_dirs, plot_out);
    if (dump->parsed()) return cmd_dump_dataset(dump_config, dump_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
