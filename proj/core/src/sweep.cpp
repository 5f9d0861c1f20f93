// SPDX-License-Identifier: Apache-2.0
#include "groklab/sweep.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace groklab {

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
}

}  // namespace

RunSummary run_single(const ExperimentConfig& cfg, uint64_t seed,
                      const std::string& run_dir, bool use_f64) {
  ExperimentConfig local = cfg;
  local.model.init_seed = seed;
  local.train.train_seed = seed;
  local.seeds = {seed};

  TaskDataset ds = local.task.build(seed);
  std::filesystem::create_directories(run_dir);
  write_text(run_dir + "/config.json", to_json(local).dump(2) + "\n");

  RunRecord rec =
      use_f64 ? train<double>(local.model, ds, local.train, run_dir)
              : train<float>(local.model, ds, local.train, run_dir);

  RunSummary s;
  s.seed = seed;
  s.grok_epoch = rec.grok_epoch;
  s.peak_test_acc = rec.peak_test_acc;
  s.diverged = rec.diverged;
  s.wall_time_seconds = rec.wall_time_seconds;
  s.run_dir = run_dir;
  write_text(run_dir + "/summary.json", summary_json(local, s).dump(2) + "\n");
  return s;
}

nlohmann::json summary_json(const ExperimentConfig& cfg,
                            const RunSummary& run) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["seed"] = run.seed;
  if (run.grok_epoch) {
    j["grok_epoch"] = *run.grok_epoch;
  } else {
    j["grok_epoch"] = nullptr;
  }
  j["peak_test_acc"] = run.peak_test_acc;
  j["diverged"] = run.diverged;
  j["wall_time_seconds"] = run.wall_time_seconds;
  return j;
}

RunSummary load_run_summary(const std::string& summary_path) {
  std::ifstream in(summary_path);
  if (!in) throw IoError("cannot open " + summary_path);
  nlohmann::json j;
  in >> j;
  RunSummary s;
  s.seed = j.at("seed").get<uint64_t>();
  if (!j.at("grok_epoch").is_null()) {
    s.grok_epoch = j.at("grok_epoch").get<int>();
  }
  s.peak_test_acc = j.at("peak_test_acc").get<double>();
  s.diverged = j.at("diverged").get<bool>();
  s.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  s.run_dir = std::filesystem::path(summary_path).parent_path().string();
  return s;
}

SweepAggregate aggregate_runs(const std::vector<RunSummary>& runs) {
  SweepAggregate a;
  a.n_runs = static_cast<int>(runs.size());
  std::vector<double> groks;
  for (const auto& r : runs) {
    if (r.diverged) ++a.diverged;
    if (r.grok_epoch) {
      groks.push_back(static_cast<double>(*r.grok_epoch));
    } else {
      ++a.failures;
    }
    a.mean_peak_acc += r.peak_test_acc;
    a.max_peak_acc = std::max(a.max_peak_acc, r.peak_test_acc);
  }
  if (a.n_runs > 0) a.mean_peak_acc /= a.n_runs;
  if (!groks.empty()) {
    double mean = 0, mn = groks[0], mx = groks[0];
    for (double g : groks) {
      mean += g;
      mn = std::min(mn, g);
      mx = std::max(mx, g);
    }
    mean /= static_cast<double>(groks.size());
    double var = 0;
    for (double g : groks) var += (g - mean) * (g - mean);
    var /= static_cast<double>(groks.size());  // population std; 0 for n=1
    a.grok_mean = mean;
    a.grok_std = std::sqrt(var);
    a.grok_min = mn;
    a.grok_max = mx;
  }
  return a;
}

nlohmann::json aggregate_json(const ExperimentConfig& cfg,
                              const SweepResult& result) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["runs"] = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json rj;
    rj["seed"] = r.seed;
    rj["grok_epoch"] =
        r.grok_epoch ? nlohmann::json(*r.grok_epoch) : nlohmann::json(nullptr);
    rj["peak_test_acc"] = r.peak_test_acc;
    rj["diverged"] = r.diverged;
    rj["run_dir"] = r.run_dir;
    j["runs"].push_back(rj);
  }
  const SweepAggregate& a = result.aggregate;
  nlohmann::json aj;
  aj["n_runs"] = a.n_runs;
  aj["failures"] = a.failures;
  aj["diverged"] = a.diverged;
  aj["grok_epoch_mean"] =
      a.grok_mean ? nlohmann::json(*a.grok_mean) : nlohmann::json(nullptr);
  aj["grok_epoch_std"] =
      a.grok_std ? nlohmann::json(*a.grok_std) : nlohmann::json(nullptr);
  aj["grok_epoch_min"] =
      a.grok_min ? nlohmann::json(*a.grok_min) : nlohmann::json(nullptr);
  aj["grok_epoch_max"] =
      a.grok_max ? nlohmann::json(*a.grok_max) : nlohmann::json(nullptr);
  aj["mean_peak_acc"] = a.mean_peak_acc;
  aj["max_peak_acc"] = a.max_peak_acc;
  j["aggregate"] = aj;
  return j;
}

std::string aggregate_table(const ExperimentConfig& cfg,
                            const SweepResult& result) {
  const SweepAggregate& a = result.aggregate;
  std::ostringstream out;
  out << "experiment: " << (cfg.note.empty() ? "(unnamed)" : cfg.note) << "\n";
  out << "seeds: " << a.n_runs << "\n";
  auto num = [](const std::optional<double>& v) {
    if (!v) return std::string("--");
    std::ostringstream s;
    s << *v;
    return s.str();
  };
  out << "grok epoch mean/std/min/max: " << num(a.grok_mean) << " / "
      << num(a.grok_std) << " / " << num(a.grok_min) << " / "
      << num(a.grok_max) << "\n";
  out << "failures: " << a.failures << " / " << a.n_runs << "\n";
  out << "mean peak acc: " << a.mean_peak_acc * 100.0 << "%\n";
  out << "max peak acc: " << a.max_peak_acc * 100.0 << "%\n";
  return out.str();
}

SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                      int jobs, bool use_f64) {
  if (cfg.seeds.empty()) throw ConfigError("sweep: no seeds");
  if (jobs < 1) jobs = 1;
  std::filesystem::create_directories(out_dir);

  std::vector<RunSummary> runs(cfg.seeds.size());
  std::vector<std::string> errors(cfg.seeds.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      uint64_t seed = cfg.seeds[i];
      std::string run_dir = out_dir + "/seed_" + std::to_string(seed);
      try {
        runs[i] = run_single(cfg, seed, run_dir, use_f64);
      } catch (const std::exception& e) {
        // Partial failures are reported per seed; the aggregate still runs.
        errors[i] = e.what();
        runs[i].seed = seed;
        runs[i].diverged = true;
        runs[i].run_dir = run_dir;
      }
    }
  };
  if (jobs == 1 || cfg.seeds.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, static_cast<int>(cfg.seeds.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SweepResult result;
  result.runs = runs;
  result.aggregate = aggregate_runs(runs);
  write_text(out_dir + "/aggregate.json",
             aggregate_json(cfg, result).dump(2) + "\n");
  write_text(out_dir + "/table.txt", aggregate_table(cfg, result));
  for (size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      write_text(runs[i].run_dir + "_error.txt", errors[i] + "\n");
    }
  }
  return result;
}

}  // namespace groklab
