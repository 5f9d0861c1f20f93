// SPDX-License-Identifier: Apache-2.0
#include "groklab/config.hpp"

#include <fstream>
#include <map>

namespace groklab {

namespace {

std::string norm_mode_str(NormMode m) {
  switch (m) {
    case NormMode::LayerNorm: return "layernorm";
    case NormMode::RmsNorm: return "rmsnorm";
    case NormMode::Spherical: return "spherical";
  }
  throw ConfigError("unknown norm mode");
}
NormMode norm_mode_parse(const std::string& s) {
  if (s == "layernorm") return NormMode::LayerNorm;
  if (s == "rmsnorm") return NormMode::RmsNorm;
  if (s == "spherical") return NormMode::Spherical;
  throw ConfigError("model.norm_mode: unknown value '" + s + "'");
}

std::string unembed_mode_str(UnembedMode m) {
  return m == UnembedMode::Standard ? "standard" : "bounded_cosine";
}
UnembedMode unembed_mode_parse(const std::string& s) {
  if (s == "standard") return UnembedMode::Standard;
  if (s == "bounded_cosine") return UnembedMode::BoundedCosine;
  throw ConfigError("model.unembed_mode: unknown value '" + s + "'");
}

std::string attention_mode_str(AttentionMode m) {
  return m == AttentionMode::Learned ? "learned" : "uniform";
}
AttentionMode attention_mode_parse(const std::string& s) {
  if (s == "learned") return AttentionMode::Learned;
  if (s == "uniform") return AttentionMode::Uniform;
  throw ConfigError("model.attention_mode: unknown value '" + s + "'");
}

std::string task_kind_str(TaskKind k) {
  return k == TaskKind::ModAdd ? "mod_add" : "s5_compose";
}
TaskKind task_kind_parse(const std::string& s) {
  if (s == "mod_add") return TaskKind::ModAdd;
  if (s == "s5_compose") return TaskKind::S5Compose;
  throw ConfigError("task.kind: unknown value '" + s + "'");
}

template <typename T>
T field(const nlohmann::json& j, const char* section, const char* name,
        const T& fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(section) + "." + name +
                      ": wrong type in config");
  }
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["note"] = cfg.note;
  j["task"] = {{"kind", task_kind_str(cfg.task.kind)},
               {"p", cfg.task.p},
               {"train_fraction", cfg.task.train_fraction}};
  j["model"] = {{"vocab_size", cfg.model.vocab_size},
                {"seq_len", cfg.model.seq_len},
                {"d_model", cfg.model.d_model},
                {"n_heads", cfg.model.n_heads},
                {"d_head", cfg.model.d_head},
                {"d_mlp", cfg.model.d_mlp},
                {"norm_mode", norm_mode_str(cfg.model.norm_mode)},
                {"unembed_mode", unembed_mode_str(cfg.model.unembed_mode)},
                {"tau", cfg.model.tau},
                {"attention_mode", attention_mode_str(cfg.model.attention_mode)},
                {"fourier_init", cfg.model.fourier_init},
                {"fourier_freqs", cfg.model.fourier_freqs}};
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"weight_decay", cfg.train.weight_decay},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"adam_eps", cfg.train.adam_eps},
                {"max_epochs", cfg.train.max_epochs},
                {"eval_every", cfg.train.eval_every},
                {"grok_threshold", cfg.train.grok_threshold}};
  if (cfg.train.stop_at_test_acc) {
    j["train"]["stop_at_test_acc"] = *cfg.train.stop_at_test_acc;
  } else {
    j["train"]["stop_at_test_acc"] = nullptr;
  }
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  return j;
}

ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("preset")) {
    cfg = preset(j.at("preset").get<std::string>());
  }
  cfg.note = field(j, "", "note", cfg.note);
  if (j.contains("task")) {
    const auto& t = j.at("task");
    if (t.contains("kind"))
      cfg.task.kind = task_kind_parse(t.at("kind").get<std::string>());
    cfg.task.p = field(t, "task", "p", cfg.task.p);
    cfg.task.train_fraction =
        field(t, "task", "train_fraction", cfg.task.train_fraction);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    ModelConfig& mc = cfg.model;
    mc.vocab_size = field(m, "model", "vocab_size", mc.vocab_size);
    mc.seq_len = field(m, "model", "seq_len", mc.seq_len);
    mc.d_model = field(m, "model", "d_model", mc.d_model);
    mc.n_heads = field(m, "model", "n_heads", mc.n_heads);
    mc.d_head = field(m, "model", "d_head", mc.d_head);
    mc.d_mlp = field(m, "model", "d_mlp", mc.d_mlp);
    if (m.contains("norm_mode"))
      mc.norm_mode = norm_mode_parse(m.at("norm_mode").get<std::string>());
    if (m.contains("unembed_mode"))
      mc.unembed_mode =
          unembed_mode_parse(m.at("unembed_mode").get<std::string>());
    mc.tau = field(m, "model", "tau", mc.tau);
    if (m.contains("attention_mode"))
      mc.attention_mode =
          attention_mode_parse(m.at("attention_mode").get<std::string>());
    mc.fourier_init = field(m, "model", "fourier_init", mc.fourier_init);
    mc.fourier_freqs = field(m, "model", "fourier_freqs", mc.fourier_freqs);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    TrainConfig& tc = cfg.train;
    tc.learning_rate = field(t, "train", "learning_rate", tc.learning_rate);
    tc.weight_decay = field(t, "train", "weight_decay", tc.weight_decay);
    tc.beta1 = field(t, "train", "beta1", tc.beta1);
    tc.beta2 = field(t, "train", "beta2", tc.beta2);
    tc.adam_eps = field(t, "train", "adam_eps", tc.adam_eps);
    tc.max_epochs = field(t, "train", "max_epochs", tc.max_epochs);
    tc.eval_every = field(t, "train", "eval_every", tc.eval_every);
    tc.grok_threshold = field(t, "train", "grok_threshold", tc.grok_threshold);
    if (t.contains("stop_at_test_acc")) {
      if (t.at("stop_at_test_acc").is_null()) {
        tc.stop_at_test_acc.reset();
      } else {
        tc.stop_at_test_acc = t.at("stop_at_test_acc").get<double>();
      }
    }
  }
  cfg.seeds = field(j, "", "seeds", cfg.seeds);
  cfg.output_dir = field(j, "", "output_dir", cfg.output_dir);

  // Keep the model vocabulary tied to the task.
  cfg.model.vocab_size = cfg.task.vocab_size();
  cfg.model.validate();
  cfg.train.validate();
  if (cfg.seeds.empty()) throw ConfigError("seeds: at least one required");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return experiment_from_json(j);
}

namespace {

ExperimentConfig zp_base() {
  ExperimentConfig c;
  c.task.kind = TaskKind::ModAdd;
  c.task.p = 113;
  c.task.train_fraction = 0.3;
  c.model.vocab_size = 114;
  c.train.eval_every = 100;
  c.train.grok_threshold = 0.99;
  return c;
}

ExperimentConfig s5_base() {
  ExperimentConfig c;
  c.task.kind = TaskKind::S5Compose;
  c.model.vocab_size = 121;
  c.train.learning_rate = 1e-3;
  c.train.max_epochs = 100000;
  c.train.eval_every = 100;
  return c;
}

void make_sphere(ExperimentConfig& c) {
  c.model.norm_mode = NormMode::Spherical;
  c.model.unembed_mode = UnembedMode::BoundedCosine;
}

std::map<std::string, ExperimentConfig> build_presets() {
  std::map<std::string, ExperimentConfig> m;

  auto add_zp_baseline = [&](const std::string& name, NormMode norm, double lr,
                             int max_epochs, const std::string& note) {
    ExperimentConfig c = zp_base();
    c.model.norm_mode = norm;
    c.train.learning_rate = lr;
    c.train.weight_decay = 1.0;
    c.train.max_epochs = max_epochs;
    c.note = note;
    m[name] = c;
  };
  add_zp_baseline("zp-baseline-ln-lr1e-4", NormMode::LayerNorm, 1e-4, 100000,
                  "Z113 LayerNorm baseline, lr 1e-4, weight decay 1.0");
  add_zp_baseline("zp-baseline-rms-lr1e-4", NormMode::RmsNorm, 1e-4, 100000,
                  "Z113 RMSNorm baseline, lr 1e-4, weight decay 1.0");
  add_zp_baseline("zp-baseline-ln-lr6e-4", NormMode::LayerNorm, 6e-4, 15000,
                  "Z113 LayerNorm baseline, lr 6e-4, weight decay 1.0");
  add_zp_baseline("zp-baseline-rms-lr6e-4", NormMode::RmsNorm, 6e-4, 15000,
                  "Z113 RMSNorm baseline, lr 6e-4, weight decay 1.0");

  auto add_zp_sphere = [&](const std::string& name, double wd, double lr,
                           int max_epochs, bool fourier,
                           const std::string& note) {
    ExperimentConfig c = zp_base();
    make_sphere(c);
    c.model.fourier_init = fourier;
    c.train.learning_rate = lr;
    c.train.weight_decay = wd;
    c.train.max_epochs = max_epochs;
    c.note = note;
    m[name] = c;
  };
  add_zp_sphere("zp-sphere-wd0-lr1e-4", 0.0, 1e-4, 15000, false,
                "Z113 bounded sphere, no weight decay, lr 1e-4");
  add_zp_sphere("zp-sphere-wd1-lr1e-4", 1.0, 1e-4, 15000, false,
                "Z113 bounded sphere, weight decay 1.0, lr 1e-4");
  add_zp_sphere("zp-sphere-wd0-lr6e-4", 0.0, 6e-4, 5000, false,
                "Z113 bounded sphere, no weight decay, lr 6e-4");
  add_zp_sphere("zp-sphere-wd1-lr6e-4", 1.0, 6e-4, 5000, false,
                "Z113 bounded sphere, weight decay 1.0, lr 6e-4");
  add_zp_sphere("zp-sphere-fourier-wd0-lr1e-4", 0.0, 1e-4, 15000, true,
                "Z113 bounded sphere + Fourier embedding init, no weight "
                "decay, lr 1e-4");
  add_zp_sphere("zp-sphere-fourier-wd1-lr1e-4", 1.0, 1e-4, 15000, true,
                "Z113 bounded sphere + Fourier embedding init, weight decay "
                "1.0, lr 1e-4");
  add_zp_sphere("zp-sphere-fourier-wd0-lr6e-4", 0.0, 6e-4, 5000, true,
                "Z113 bounded sphere + Fourier embedding init, no weight "
                "decay, lr 6e-4");
  add_zp_sphere("zp-sphere-fourier-wd1-lr6e-4", 1.0, 6e-4, 5000, true,
                "Z113 bounded sphere + Fourier embedding init, weight decay "
                "1.0, lr 6e-4");

  auto add_uniform = [&](const std::string& name, bool sphere, double wd,
                         const std::string& note) {
    ExperimentConfig c = zp_base();
    if (sphere) make_sphere(c);
    c.model.attention_mode = AttentionMode::Uniform;
    c.train.learning_rate = 6e-4;
    c.train.weight_decay = wd;
    c.train.beta2 = 0.98;
    c.train.max_epochs = 20000;
    c.note = note;
    m[name] = c;
  };
  add_uniform("zp-uniform-attn-ln", false, 1.0,
              "Z113 uniform-attention ablation on the LayerNorm baseline, "
              "weight decay 1.0, beta2 0.98");
  add_uniform("zp-uniform-attn-sphere-wd1", true, 1.0,
              "Z113 uniform-attention ablation on the bounded sphere, weight "
              "decay 1.0, beta2 0.98");
  add_uniform("zp-uniform-attn-sphere-wd0", true, 0.0,
              "Z113 uniform-attention ablation on the bounded sphere, no "
              "weight decay, beta2 0.98");

  {
    ExperimentConfig c = s5_base();
    c.model.norm_mode = NormMode::LayerNorm;
    c.train.weight_decay = 1.0;
    c.note = "S5 composition LayerNorm baseline, lr 1e-3, weight decay 1.0";
    m["s5-baseline-ln"] = c;
    c.model.norm_mode = NormMode::RmsNorm;
    c.note = "S5 composition RMSNorm baseline, lr 1e-3, weight decay 1.0";
    m["s5-baseline-rms"] = c;
  }
  {
    ExperimentConfig c = s5_base();
    make_sphere(c);
    c.train.weight_decay = 0.0;
    c.note = "S5 composition bounded sphere, no weight decay, lr 1e-3";
    m["s5-sphere-wd0"] = c;
    c.train.weight_decay = 1.0;
    c.note = "S5 composition bounded sphere, weight decay 1.0, lr 1e-3";
    m["s5-sphere-wd1"] = c;
  }
  return m;
}

const std::map<std::string, ExperimentConfig>& presets() {
  static const std::map<std::string, ExperimentConfig> m = build_presets();
  return m;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : presets()) names.push_back(k);
  return names;
}

ExperimentConfig preset(const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return it->second;
}

}  // namespace groklab
