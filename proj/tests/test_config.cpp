// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "groklab/config.hpp"
#include "groklab/sweep.hpp"

using namespace groklab;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.task.kind = TaskKind::ModAdd;
  cfg.task.p = 5;
  cfg.task.train_fraction = 0.8;
  cfg.model.vocab_size = 6;
  cfg.model.d_model = 8;
  cfg.model.n_heads = 2;
  cfg.model.d_head = 4;
  cfg.model.d_mlp = 8;
  cfg.model.fourier_freqs = {1, 2};
  cfg.train.learning_rate = 1e-3;
  cfg.train.max_epochs = 10;
  cfg.train.eval_every = 5;
  return cfg;
}

}  // namespace

TEST_CASE("every preset serializes and reparses to identical JSON") {
  std::vector<std::string> names = preset_names();
  CHECK(names.size() == 19u);
  for (const std::string& name : names) {
    ExperimentConfig cfg = preset(name);
    CHECK_NOTHROW(cfg.model.validate());
    CHECK_NOTHROW(cfg.train.validate());
    CHECK(!cfg.note.empty());
    std::string first = to_json(cfg).dump();
    ExperimentConfig round = experiment_from_json(to_json(cfg));
    CHECK(to_json(round).dump() == first);
  }
  CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
}

TEST_CASE("preset catalogue covers the reference experiments") {
  std::vector<std::string> names = preset_names();
  auto has = [&](const char* n) {
    return std::find(names.begin(), names.end(), n) != names.end();
  };
  CHECK(has("zp-baseline-ln-lr1e-4"));
  CHECK(has("zp-baseline-ln-lr6e-4"));
  CHECK(has("zp-sphere-wd0-lr1e-4"));
  CHECK(has("zp-sphere-wd0-lr6e-4"));
  CHECK(has("zp-sphere-fourier-wd0-lr1e-4"));
  CHECK(has("zp-uniform-attn-ln"));
  CHECK(has("s5-baseline-ln"));
  CHECK(has("s5-sphere-wd0"));

  ExperimentConfig sphere = preset("zp-sphere-wd0-lr6e-4");
  CHECK(sphere.model.norm_mode == NormMode::Spherical);
  CHECK(sphere.model.unembed_mode == UnembedMode::BoundedCosine);
  CHECK(sphere.model.tau == 10.0);
  CHECK(sphere.train.weight_decay == 0.0);
  CHECK(sphere.train.learning_rate == 6e-4);
  CHECK(sphere.task.p == 113);
  CHECK(sphere.model.vocab_size == 114);
  CHECK(sphere.model.d_model == 128);
  CHECK(sphere.model.n_heads == 4);
  CHECK(sphere.model.d_mlp == 512);

  ExperimentConfig uniform = preset("zp-uniform-attn-ln");
  CHECK(uniform.model.attention_mode == AttentionMode::Uniform);
  CHECK(uniform.train.beta2 == 0.98);
  CHECK(uniform.train.weight_decay == 1.0);

  ExperimentConfig s5 = preset("s5-sphere-wd0");
  CHECK(s5.task.kind == TaskKind::S5Compose);
  CHECK(s5.model.vocab_size == 121);
  CHECK(s5.train.learning_rate == 1e-3);
}

TEST_CASE("config file with a preset key applies overrides on top") {
  auto dir = fs::temp_directory_path() / "groklab_cfg_test";
  fs::create_directories(dir);
  auto path = dir / "exp.json";
  write_file(path, R"({
    "preset": "zp-sphere-wd0-lr6e-4",
    "train": {"max_epochs": 123, "stop_at_test_acc": 0.5},
    "seeds": [3, 4],
    "output_dir": "out/test"
  })");
  ExperimentConfig cfg = load_experiment_config(path.string());
  CHECK(cfg.train.max_epochs == 123);
  CHECK(cfg.train.learning_rate == 6e-4);  // from the preset
  CHECK(cfg.model.norm_mode == NormMode::Spherical);
  CHECK(cfg.seeds == std::vector<uint64_t>{3, 4});
  CHECK(cfg.output_dir == "out/test");
  REQUIRE(cfg.train.stop_at_test_acc.has_value());
  CHECK(*cfg.train.stop_at_test_acc == 0.5);

  // Null clears the stop threshold again.
  write_file(path, R"({
    "preset": "zp-sphere-wd0-lr6e-4",
    "train": {"stop_at_test_acc": null}
  })");
  CHECK_FALSE(
      load_experiment_config(path.string()).train.stop_at_test_acc.has_value());
  fs::remove_all(dir);
}

TEST_CASE("config schema errors are reported as config errors") {
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), IoError);

  auto dir = fs::temp_directory_path() / "groklab_cfg_bad";
  fs::create_directories(dir);
  auto path = dir / "bad.json";

  write_file(path, "{ not json");
  CHECK_THROWS_AS(load_experiment_config(path.string()), ConfigError);

  write_file(path, R"({"model": {"norm_mode": "hyperbolic"}})");
  CHECK_THROWS_AS(load_experiment_config(path.string()), ConfigError);

  write_file(path, R"({"train": {"learning_rate": "fast"}})");
  CHECK_THROWS_AS(load_experiment_config(path.string()), ConfigError);

  write_file(path, R"({"seeds": []})");
  CHECK_THROWS_AS(load_experiment_config(path.string()), ConfigError);

  // Spherical stream without the bounded unembedding is inconsistent.
  write_file(path, R"({"model": {"norm_mode": "spherical"}})");
  CHECK_THROWS_AS(load_experiment_config(path.string()), ConfigError);

  // Vocabulary always follows the task.
  write_file(path, R"({"preset": "zp-baseline-ln-lr6e-4",
                       "model": {"vocab_size": 7}})");
  CHECK(load_experiment_config(path.string()).model.vocab_size == 114);
  fs::remove_all(dir);
}

TEST_CASE("aggregate statistics over run summaries") {
  RunSummary a;
  a.seed = 0;
  a.grok_epoch = 100;
  a.peak_test_acc = 1.0;
  RunSummary b;
  b.seed = 1;
  b.grok_epoch = 300;
  b.peak_test_acc = 0.995;
  RunSummary c;
  c.seed = 2;
  c.peak_test_acc = 0.4;  // never grokked
  c.diverged = true;

  SweepAggregate agg = aggregate_runs({a, b, c});
  CHECK(agg.n_runs == 3);
  CHECK(agg.failures == 1);
  CHECK(agg.diverged == 1);
  REQUIRE(agg.grok_mean.has_value());
  CHECK(*agg.grok_mean == 200.0);
  CHECK(*agg.grok_std == 100.0);  // population std over {100, 300}
  CHECK(*agg.grok_min == 100.0);
  CHECK(*agg.grok_max == 300.0);
  CHECK(agg.mean_peak_acc == doctest::Approx((1.0 + 0.995 + 0.4) / 3));
  CHECK(agg.max_peak_acc == 1.0);

  SweepAggregate none = aggregate_runs({c});
  CHECK_FALSE(none.grok_mean.has_value());
  CHECK(none.failures == 1);

  SweepAggregate single = aggregate_runs({a});
  CHECK(*single.grok_std == 0.0);
}

TEST_CASE("sweep writes per-seed artifacts and the aggregate") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.seeds = {0, 1};
  auto dir = fs::temp_directory_path() / "groklab_sweep_test";
  fs::remove_all(dir);

  SweepResult res = run_sweep(cfg, dir.string(), 2, /*use_f64=*/true);
  CHECK(res.runs.size() == 2u);
  CHECK(res.aggregate.n_runs == 2);
  for (uint64_t seed : cfg.seeds) {
    fs::path run_dir = dir / ("seed_" + std::to_string(seed));
    CHECK(fs::exists(run_dir / "config.json"));
    CHECK(fs::exists(run_dir / "summary.json"));
    CHECK(fs::exists(run_dir / "metrics.csv"));
    CHECK(fs::exists(run_dir / "checkpoint_final.ckpt"));

    RunSummary loaded =
        load_run_summary((run_dir / "summary.json").string());
    CHECK(loaded.seed == seed);

    // The echoed config records the per-run seeding.
    std::ifstream in(run_dir / "config.json");
    nlohmann::json j;
    in >> j;
    CHECK(j["seeds"] == nlohmann::json::array({seed}));
  }
  CHECK(fs::exists(dir / "aggregate.json"));
  CHECK(fs::exists(dir / "table.txt"));

  std::ifstream in(dir / "aggregate.json");
  nlohmann::json agg;
  in >> agg;
  CHECK(agg["aggregate"]["n_runs"] == 2);
  CHECK(agg["runs"].size() == 2u);
  fs::remove_all(dir);
}

TEST_CASE("identical seeds reproduce identical metrics files") {
  ExperimentConfig cfg = tiny_experiment();
  auto dir = fs::temp_directory_path() / "groklab_repro_test";
  fs::remove_all(dir);
  run_single(cfg, 7, (dir / "a").string(), /*use_f64=*/true);
  run_single(cfg, 7, (dir / "b").string(), /*use_f64=*/true);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
  CHECK(slurp(dir / "a" / "checkpoint_final.ckpt") ==
        slurp(dir / "b" / "checkpoint_final.ckpt"));
  fs::remove_all(dir);
}
