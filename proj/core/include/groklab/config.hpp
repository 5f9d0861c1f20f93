// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "groklab/model.hpp"
#include "groklab/tasks.hpp"
#include "groklab/train.hpp"

namespace groklab {

struct TaskConfig {
  TaskKind kind = TaskKind::ModAdd;
  int p = 113;  // ignored for S5
  double train_fraction = 0.3;

  TaskDataset build(uint64_t split_seed) const {
    return kind == TaskKind::ModAdd ? gen_mod_add(p, split_seed, train_fraction)
                                    : gen_s5(split_seed, train_fraction);
  }
  int vocab_size() const { return kind == TaskKind::ModAdd ? p + 1 : 121; }
};

/// A full experiment: model + task + training schedule plus the seed list.
/// Each seed drives the embedding init, the split shuffle and the train rng.
struct ExperimentConfig {
  std::string note;
  TaskConfig task;
  ModelConfig model;
  TrainConfig train;
  std::vector<uint64_t> seeds = {0};
  std::string output_dir;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const nlohmann::json& j);

/// Parses a config file. A top-level "preset" name loads the named preset
/// first; any other keys present override individual preset fields.
ExperimentConfig load_experiment_config(const std::string& path);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

}  // namespace groklab
