// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Each numbered criterion prints exactly one PASS/FAIL
// line; the process exits non-zero if any requested criterion fails.
//
//   1  correctness: gradient checks and architectural invariants
//   2  dataset oracles: exhaustive labels and group properties
//   3  spherical-stream acceleration (grok epoch band, 3 seeds)
//   4  baseline grokking delay and the >=5x ordering (3 seeds each)
//   5  uniform-attention ablation reaches 100% test accuracy (3 seeds)
//   6  spectral verification on a grokked checkpoint
//   7  permutation-composition negative control (long; off by default)
//   8  bitwise determinism of 64-bit runs and checkpoints
//
// Training criteria reuse results under --out across invocations, so a
// completed sweep is not retrained when the gate is rerun.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "groklab/analysis.hpp"
#include "groklab/checkpoint.hpp"
#include "groklab/config.hpp"
#include "groklab/grad_check.hpp"
#include "groklab/sweep.hpp"
#include "groklab/tasks.hpp"
#include "groklab/train.hpp"

namespace fs = std::filesystem;
using namespace groklab;

namespace {

fs::path g_out = "acceptance_runs";

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": "
            << detail << std::endl;
}

void note(const std::string& msg) {
  std::cout << "  .. " << msg << std::endl;
}

ModelConfig tiny_config(uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.vocab_size = 6;
  cfg.seq_len = 3;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_head = 4;
  cfg.d_mlp = 8;
  cfg.fourier_freqs = {1, 2};
  cfg.init_seed = seed;
  return cfg;
}

std::vector<int> tiny_tokens() {
  return {0, 1, 5, 2, 3, 5, 4, 4, 5, 1, 0, 5, 3, 2, 5};
}
std::vector<int> tiny_labels() { return {1, 0, 3, 1, 0}; }

double loss_value(const ModelConfig& cfg, const Params<double>& params,
                  const std::vector<int>& tokens,
                  const std::vector<int>& labels) {
  Tape<double> tape;
  auto ids = stage_params(tape, params, false);
  auto r = forward(tape, ids, cfg, tokens);
  return tape.value(tape.cross_entropy_mean(r.logits, labels)).data[0];
}

/// Finite-difference check of every parameter coordinate of the toy model.
double full_model_grad_error(const ModelConfig& cfg) {
  Params<double> params = init_params<double>(cfg);
  auto tokens = tiny_tokens();
  auto labels = tiny_labels();

  Tape<double> tape;
  auto ids = stage_params(tape, params, true);
  auto r = forward(tape, ids, cfg, tokens);
  tape.backward(tape.cross_entropy_mean(r.logits, labels));

  std::vector<Tape<double>::Id> id_order = {ids.token_embed, ids.pos_embed};
  for (size_t h = 0; h < ids.w_q.size(); ++h) {
    id_order.push_back(ids.w_q[h]);
    id_order.push_back(ids.w_k[h]);
    id_order.push_back(ids.w_v[h]);
  }
  id_order.insert(id_order.end(),
                  {ids.w_o, ids.w_in, ids.b_in, ids.w_out, ids.b_out});
  for (auto id : ids.norm_gamma) id_order.push_back(id);
  for (auto id : ids.norm_beta) id_order.push_back(id);
  id_order.push_back(ids.w_unembed);

  std::vector<Tensor<double>*> tensors;
  params.for_each(
      [&](const char*, Tensor<double>& t) { tensors.push_back(&t); });

  const double step = 1e-5;
  double max_rel = 0.0;
  for (size_t t = 0; t < tensors.size(); ++t) {
    const Tensor<double>& analytic = tape.grad(id_order[t]);
    for (size_t i = 0; i < tensors[t]->data.size(); ++i) {
      double orig = tensors[t]->data[i];
      tensors[t]->data[i] = orig + step;
      double fp = loss_value(cfg, params, tokens, labels);
      tensors[t]->data[i] = orig - step;
      double fm = loss_value(cfg, params, tokens, labels);
      tensors[t]->data[i] = orig;
      double numeric = (fp - fm) / (2.0 * step);
      double a = analytic.data[i];
      double rel = std::abs(a - numeric) /
                   std::max(1e-6, std::abs(a) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

Tensor<double> rand_tensor(std::vector<int> shape, SplitMix64& rng,
                           double scale = 1.0) {
  Tensor<double> t = Tensor<double>::zeros(std::move(shape));
  for (double& v : t.data) v = rng.normal() * scale;
  return t;
}

// ------------------------------------------------------------- criterion 1

bool criterion1() {
  using Id = Tape<double>::Id;
  std::ostringstream why;
  bool ok = true;

  // Per-op gradient checks.
  SplitMix64 rng(101);
  struct OpCheck {
    const char* name;
    double err;
  };
  std::vector<OpCheck> checks;
  {
    auto a = rand_tensor({4, 4}, rng);
    auto b = rand_tensor({4, 4}, rng);
    checks.push_back({"matmul", grad_check(
        [](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.matmul(in[0], in[1]));
        }, {a, b})});
  }
  {
    auto x = rand_tensor({2, 5}, rng);
    auto w = rand_tensor({2, 5}, rng);
    checks.push_back({"softmax", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.softmax_rows(in[0]), t.leaf(w, false)));
        }, {x})});
    checks.push_back({"relu", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.relu(in[0]), t.leaf(w, false)));
        }, {x})});
    checks.push_back({"l2_normalize_rows", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.l2_normalize_rows(in[0]), t.leaf(w, false)));
        }, {x})});
    checks.push_back({"l2_normalize_cols", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.l2_normalize_cols(in[0]), t.leaf(w, false)));
        }, {x})});
    checks.push_back({"cross_entropy", grad_check(
        [](Tape<double>& t, const std::vector<Id>& in) {
          return t.cross_entropy_mean(in[0], {2, 0});
        }, {x})});
  }
  {
    auto x = rand_tensor({3, 6}, rng);
    auto gamma = rand_tensor({6}, rng, 0.5);
    auto beta = rand_tensor({6}, rng, 0.5);
    auto w = rand_tensor({3, 6}, rng);
    checks.push_back({"layer_norm", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.layer_norm_rows(in[0], in[1], in[2]),
                             t.leaf(w, false)));
        }, {x, gamma, beta})});
    checks.push_back({"rms_norm", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.rms_norm_rows(in[0], in[1]), t.leaf(w, false)));
        }, {x, gamma})});
  }
  {
    auto table = rand_tensor({3, 4}, rng);
    auto w = rand_tensor({3, 4}, rng);
    checks.push_back({"gather_rows", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.gather_rows(in[0], {0, 2, 2}),
                             t.leaf(w, false)));
        }, {table})});
  }
  {
    auto q = rand_tensor({2, 4}, rng);
    auto k = rand_tensor({6, 4}, rng);
    auto wv = rand_tensor({6, 4}, rng);
    auto ws = rand_tensor({2, 3}, rng);
    auto wm = rand_tensor({2, 4}, rng);
    checks.push_back({"attn_scores", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.attn_scores(in[0], in[1], 3, 0.5),
                             t.leaf(ws, false)));
        }, {q, k})});
    auto weights = rand_tensor({2, 3}, rng);
    checks.push_back({"attn_mix", grad_check(
        [&](Tape<double>& t, const std::vector<Id>& in) {
          return t.sum(t.mul(t.attn_mix(in[0], in[1], 3), t.leaf(wm, false)));
        }, {weights, wv})});
  }
  for (const auto& c : checks) {
    if (!(c.err < 1e-4)) {
      ok = false;
      why << " op " << c.name << " grad err " << c.err << ";";
    }
  }

  // Full toy model, all four architecture variants.
  struct Variant {
    const char* name;
    ModelConfig cfg;
  };
  std::vector<Variant> variants;
  variants.push_back({"layernorm", tiny_config(1)});
  {
    ModelConfig c = tiny_config(2);
    c.norm_mode = NormMode::RmsNorm;
    variants.push_back({"rmsnorm", c});
  }
  {
    ModelConfig c = tiny_config(3);
    c.norm_mode = NormMode::Spherical;
    c.unembed_mode = UnembedMode::BoundedCosine;
    c.fourier_init = true;
    variants.push_back({"spherical", c});
  }
  {
    ModelConfig c = tiny_config(4);
    c.attention_mode = AttentionMode::Uniform;
    variants.push_back({"uniform-attn", c});
  }
  for (const auto& v : variants) {
    double err = full_model_grad_error(v.cfg);
    if (!(err < 1e-4)) {
      ok = false;
      why << " model(" << v.name << ") grad err " << err << ";";
    }
  }

  // 1,000 randomized invariant trials.
  int bad_norm = 0, bad_softmax = 0, bad_bound = 0, bad_uniform = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    ModelConfig cfg = tiny_config(1000 + trial);
    cfg.norm_mode = NormMode::Spherical;
    cfg.unembed_mode = UnembedMode::BoundedCosine;
    Params<double> params = init_params<double>(cfg);
    // Random perturbation so trials are not just fresh inits.
    SplitMix64 prng(trial);
    params.for_each([&](const char*, Tensor<double>& t) {
      for (double& v : t.data) v += prng.normal() * 0.1;
    });
    std::vector<int> tokens(15);
    for (size_t i = 0; i < tokens.size(); ++i) {
      tokens[i] = (i % 3 == 2) ? 5 : static_cast<int>(prng.below(5));
    }
    Tape<double> tape;
    auto ids = stage_params(tape, params, false);
    auto r = forward(tape, ids, cfg, tokens);

    const auto& h = tape.value(r.h_final);
    for (int i = 0; i < h.shape[0]; ++i) {
      double ss = 0.0;
      for (int j = 0; j < h.cols(); ++j) ss += h(i, j) * h(i, j);
      double n = std::sqrt(ss);
      if (!(n == 0.0 || std::abs(n - 1.0) < 1e-5)) ++bad_norm;
    }
    const auto& w = tape.value(r.attn_weights_head0);
    for (int i = 0; i < w.shape[0]; ++i) {
      double s = 0.0;
      for (int j = 0; j < w.cols(); ++j) s += w(i, j);
      if (!(std::abs(s - 1.0) < 1e-6)) ++bad_softmax;
    }
    for (double v : tape.value(r.logits).data) {
      if (!(std::abs(v) <= cfg.tau + 1e-9)) ++bad_bound;
    }

    ModelConfig ucfg = cfg;
    ucfg.attention_mode = AttentionMode::Uniform;
    Tape<double> utape;
    auto uids = stage_params(utape, params, false);
    auto ur = forward(utape, uids, ucfg, tokens);
    for (double v : utape.value(ur.attn_weights_head0).data) {
      if (v != 1.0 / 3.0) ++bad_uniform;
    }
  }
  if (bad_norm || bad_softmax || bad_bound || bad_uniform) {
    ok = false;
    why << " invariant violations: norm " << bad_norm << ", softmax-sum "
        << bad_softmax << ", logit-bound " << bad_bound << ", uniform "
        << bad_uniform << ";";
  }

  report(1, ok,
         ok ? "gradient checks < 1e-4 and all invariants held over 1,000 "
              "randomized trials"
            : "correctness suite failed:" + why.str());
  return ok;
}

// ------------------------------------------------------------- criterion 2

bool criterion2() {
  std::ostringstream why;
  bool ok = true;

  TaskDataset zp = gen_mod_add(113, 0);
  if (zp.size() != 12769u) {
    ok = false;
    why << " Z113 size " << zp.size() << ";";
  }
  std::set<std::pair<int, int>> pairs;
  for (size_t i = 0; i < zp.size(); ++i) {
    int a = zp.sequences[i][0], b = zp.sequences[i][1];
    pairs.emplace(a, b);
    if (zp.labels[i] != (a + b) % 113 || zp.sequences[i][2] != 113) {
      ok = false;
      why << " Z113 label mismatch at " << i << ";";
      break;
    }
  }
  if (pairs.size() != zp.size()) {
    ok = false;
    why << " Z113 duplicate pairs;";
  }

  // S5 group properties.
  std::array<int, 5> id_perm = {0, 1, 2, 3, 4};
  for (int i = 0; i < 120; ++i) {
    auto g = index_perm(i);
    if (perm_index(g) != i) {
      ok = false;
      why << " enumeration round-trip failed at " << i << ";";
      break;
    }
    if (perm_compose(g, id_perm) != g || perm_compose(id_perm, g) != g) {
      ok = false;
      why << " identity law failed at " << i << ";";
      break;
    }
  }
  bool noncommutative = false;
  for (int i = 0; i < 120 && !noncommutative; ++i) {
    for (int j = 0; j < 120 && !noncommutative; ++j) {
      auto a = index_perm(i), b = index_perm(j);
      if (perm_compose(a, b) != perm_compose(b, a)) noncommutative = true;
    }
  }
  if (!noncommutative) {
    ok = false;
    why << " no non-commuting pair found;";
  }

  TaskDataset s5 = gen_s5(0);
  if (s5.size() != 14400u || s5.vocab_size != 121) {
    ok = false;
    why << " S5 size/vocab wrong;";
  }
  for (size_t i = 0; i < s5.size(); ++i) {
    auto a = index_perm(s5.sequences[i][0]);
    auto b = index_perm(s5.sequences[i][1]);
    if (s5.labels[i] != perm_index(perm_compose(a, b))) {
      ok = false;
      why << " S5 label mismatch at " << i << ";";
      break;
    }
  }

  report(2, ok,
         ok ? "exhaustive Z113 labels (12,769 pairs) and S5 group properties "
              "verified"
            : "dataset oracles failed:" + why.str());
  return ok;
}

// ----------------------------------------------------- training criteria

RunSummary ensure_run(const std::string& preset_name, uint64_t seed,
                      std::optional<double> stop_acc, const fs::path& dir,
                      std::optional<int> max_epochs = std::nullopt) {
  fs::path summary = dir / "summary.json";
  if (fs::exists(summary)) {
    note("reusing " + summary.string());
    return load_run_summary(summary.string());
  }
  ExperimentConfig cfg = preset(preset_name);
  cfg.train.stop_at_test_acc = stop_acc;
  if (max_epochs) cfg.train.max_epochs = *max_epochs;
  note("training " + preset_name + " seed " + std::to_string(seed) +
       " (max " + std::to_string(cfg.train.max_epochs) + " epochs)");
  RunSummary s = run_single(cfg, seed, dir.string());
  std::ostringstream msg;
  msg << preset_name << " seed " << seed << ": ";
  if (s.grok_epoch) {
    msg << "grokked at epoch " << *s.grok_epoch;
  } else {
    msg << (s.diverged ? "diverged" : "no grok");
  }
  msg << ", peak " << s.peak_test_acc * 100.0 << "% in " << s.wall_time_seconds
      << "s";
  note(msg.str());
  return s;
}

std::vector<RunSummary> ensure_sweep(const std::string& preset_name,
                                     std::optional<double> stop_acc,
                                     const fs::path& dir) {
  std::vector<RunSummary> out;
  for (uint64_t seed : {0ull, 1ull, 2ull}) {
    out.push_back(ensure_run(preset_name, seed, stop_acc,
                             dir / ("seed_" + std::to_string(seed))));
  }
  return out;
}

bool criterion3() {
  auto runs = ensure_sweep("zp-sphere-wd0-lr1e-4", 0.99, g_out / "c3_sphere");
  bool ok = true;
  std::ostringstream why;
  for (const auto& r : runs) {
    if (!r.grok_epoch) {
      ok = false;
      why << " seed " << r.seed << " never grokked (peak "
          << r.peak_test_acc * 100.0 << "%);";
    } else if (*r.grok_epoch < 1200 || *r.grok_epoch > 5000) {
      ok = false;
      why << " seed " << r.seed << " grok epoch " << *r.grok_epoch
          << " outside [1200, 5000];";
    }
  }
  std::ostringstream detail;
  if (ok) {
    detail << "spherical stream (no decay, lr 1e-4) grok epochs";
    for (const auto& r : runs) detail << " " << *r.grok_epoch;
    detail << " all within [1200, 5000]";
  } else {
    detail << "spherical acceleration failed:" << why.str();
  }
  report(3, ok, detail.str());
  return ok;
}

bool criterion4() {
  auto baseline =
      ensure_sweep("zp-baseline-ln-lr6e-4", 0.99, g_out / "c4_baseline");
  auto sphere =
      ensure_sweep("zp-sphere-wd0-lr6e-4", 0.99, g_out / "c4_sphere");
  bool ok = true;
  std::ostringstream why;
  for (const auto& r : baseline) {
    if (!r.grok_epoch) {
      ok = false;
      why << " baseline seed " << r.seed << " never grokked (peak "
          << r.peak_test_acc * 100.0 << "%);";
    } else if (*r.grok_epoch < 4000 || *r.grok_epoch > 15000) {
      ok = false;
      why << " baseline seed " << r.seed << " grok epoch " << *r.grok_epoch
          << " outside [4000, 15000];";
    }
  }
  for (const auto& s : sphere) {
    if (!s.grok_epoch) {
      ok = false;
      why << " sphere seed " << s.seed << " never grokked;";
    }
  }
  if (ok) {
    for (const auto& s : sphere) {
      for (const auto& b : baseline) {
        if (*b.grok_epoch < 5 * *s.grok_epoch) {
          ok = false;
          why << " ordering violated: sphere seed " << s.seed << " ("
              << *s.grok_epoch << ") vs baseline seed " << b.seed << " ("
              << *b.grok_epoch << ");";
        }
      }
    }
  }
  std::ostringstream detail;
  if (ok) {
    detail << "baseline grok epochs";
    for (const auto& r : baseline) detail << " " << *r.grok_epoch;
    detail << " in [4000, 15000]; sphere epochs";
    for (const auto& s : sphere) detail << " " << *s.grok_epoch;
    detail << "; >=5x ordering holds for all seed pairs";
  } else {
    detail << "baseline delay/ordering failed:" << why.str();
  }
  report(4, ok, detail.str());
  return ok;
}

bool criterion5() {
  auto runs = ensure_sweep("zp-uniform-attn-ln", 1.0, g_out / "c5_uniform");
  bool ok = true;
  std::ostringstream why;
  for (const auto& r : runs) {
    if (r.peak_test_acc < 1.0) {
      ok = false;
      why << " seed " << r.seed << " peaked at " << r.peak_test_acc * 100.0
          << "% within 20000 epochs;";
    }
  }
  report(5, ok,
         ok ? "uniform-attention ablation reached 100% test accuracy on 3/3 "
              "seeds"
            : "uniform-attention ablation failed:" + why.str());
  return ok;
}

bool criterion6() {
  bool ok = true;
  std::ostringstream why;

  // Parseval property on a random logit map.
  {
    SplitMix64 rng(5);
    int p = 113, d_mlp = 16;
    Tensor<double> wl = Tensor<double>::zeros({p, d_mlp});
    for (double& v : wl.data) v = rng.normal();
    std::vector<double> energy = frequency_energies(wl);
    double positive = 0.0;
    for (int k = 1; k <= p / 2; ++k) positive += energy[k];
    double dc = 0.0, total_ss = 0.0;
    for (int j = 0; j < d_mlp; ++j) {
      double s = 0.0;
      for (int c = 0; c < p; ++c) {
        s += wl(c, j);
        total_ss += wl(c, j) * wl(c, j);
      }
      dc += s * s;
    }
    double rel = std::abs(2.0 * positive + dc - p * total_ss) / (p * total_ss);
    if (!(rel < 1e-9)) {
      ok = false;
      why << " Parseval rel err " << rel << ";";
    }
  }

  // Full-basis projection identity on the toy modulus.
  {
    ModelConfig cfg = tiny_config(21);
    Params<double> params = init_params<double>(cfg);
    TaskDataset ds = gen_mod_add(5, 4, 0.4);
    double ablated = frequency_ablation_accuracy(params, cfg, ds, {1, 2});
    std::vector<int> tokens, labels;
    collect_split(ds, ds.test_idx, tokens, labels);
    Tape<double> tape;
    auto ids = stage_params(tape, params, false);
    auto r = forward(tape, ids, cfg, tokens);
    const Tensor<double>& logits = tape.value(r.logits);
    int correct = 0;
    for (int i = 0; i < logits.shape[0]; ++i) {
      int best = 0;
      for (int c = 1; c < ds.p; ++c)
        if (logits(i, c) > logits(i, best)) best = c;
      if (best == labels[static_cast<size_t>(i)]) ++correct;
    }
    double direct = static_cast<double>(correct) / logits.shape[0];
    if (ablated != direct) {
      ok = false;
      why << " full-basis identity: ablated " << ablated << " vs direct "
          << direct << ";";
    }
  }

  // A grokked spherical model, trained to the end of its schedule: the
  // Fourier structure keeps consolidating after the grok epoch, so the
  // spectral measurements use the final checkpoint, not the grok-moment one.
  RunSummary run = ensure_run("zp-sphere-wd0-lr6e-4", 0, std::nullopt,
                              g_out / "c6_sphere_full" / "seed_0");
  fs::path ckpt = fs::path(run.run_dir) / "checkpoint_final.ckpt";
  if (!run.grok_epoch || !fs::exists(ckpt)) {
    ok = false;
    why << " no grokked checkpoint available (peak "
        << run.peak_test_acc * 100.0 << "%);";
  } else {
    ExperimentConfig cfg = preset("zp-sphere-wd0-lr6e-4");
    Params<double> params = load_checkpoint<double>(ckpt.string(), cfg.model);
    TaskDataset ds = cfg.task.build(run.seed);
    SpectralReport rep = spectral_report(params, cfg.model, ds, 5, 0.99);
    {
      std::ofstream out(g_out / "c6_spectral_report.json");
      out << spectral_report_json(rep);
    }
    std::ostringstream info;
    info << "top-5 freqs";
    for (const auto& [k, e] : rep.top_frequencies) info << " " << k;
    info << "; ablation acc " << rep.ablation_accuracy * 100.0
         << "%, plain acc " << rep.plain_accuracy * 100.0 << "%";
    note(info.str());
    if (!rep.grokked) {
      ok = false;
      why << " checkpoint below grok threshold;";
    }
    if (!(rep.ablation_accuracy >= 0.99)) {
      ok = false;
      why << " top-5 ablation accuracy " << rep.ablation_accuracy * 100.0
          << "% < 99%;";
    }
    double max_fve = 0.0;
    for (const auto& f : rep.fve) {
      max_fve = std::max({max_fve, f.fve_u, f.fve_v});
    }
    note("max per-frequency FVE " + std::to_string(max_fve));
    if (!(max_fve > 0.35)) {
      ok = false;
      why << " max FVE " << max_fve << " <= 0.35;";
    }
  }

  report(6, ok,
         ok ? "spectral checks passed: Parseval, full-basis identity, top-5 "
              "ablation >= 99%, max FVE > 0.35"
            : "spectral verification failed:" + why.str());
  return ok;
}

bool criterion7() {
  RunSummary run = ensure_run("s5-sphere-wd0", 0, std::nullopt,
                              g_out / "c7_s5_sphere" / "seed_0", 30000);
  bool ok = true;
  std::ostringstream why;
  // Inspect the metrics trace: train accuracy must reach 100% while test
  // accuracy never leaves chance territory.
  fs::path csv = fs::path(run.run_dir) / "metrics.csv";
  double best_train = 0.0, best_test = 0.0;
  std::ifstream in(csv);
  if (!in) {
    ok = false;
    why << " missing " << csv.string() << ";";
  } else {
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      std::istringstream row(line);
      std::string cell;
      std::vector<double> cols;
      while (std::getline(row, cell, ',')) cols.push_back(std::stod(cell));
      if (cols.size() >= 5) {
        best_train = std::max(best_train, cols[3]);
        best_test = std::max(best_test, cols[4]);
      }
    }
    note("S5 sphere: best train acc " + std::to_string(best_train * 100.0) +
         "%, best test acc " + std::to_string(best_test * 100.0) + "%");
    if (best_train < 1.0) {
      ok = false;
      why << " train accuracy peaked at " << best_train * 100.0 << "%;";
    }
    if (best_test >= 0.10) {
      ok = false;
      why << " test accuracy reached " << best_test * 100.0 << "% >= 10%;";
    }
  }
  report(7, ok,
         ok ? "S5 negative control: 100% train, test accuracy stayed below "
              "10% through 30,000 epochs"
            : "S5 negative control failed:" + why.str());
  return ok;
}

bool criterion8() {
  bool ok = true;
  std::ostringstream why;

  ExperimentConfig cfg;
  cfg.task.p = 23;
  cfg.task.train_fraction = 0.3;
  cfg.model.vocab_size = 24;
  cfg.train.learning_rate = 6e-4;
  cfg.train.max_epochs = 50;
  cfg.train.eval_every = 10;

  fs::path dir = g_out / "c8_determinism";
  fs::remove_all(dir);
  run_single(cfg, 5, (dir / "a").string(), /*use_f64=*/true);
  run_single(cfg, 5, (dir / "b").string(), /*use_f64=*/true);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
  };
  if (slurp(dir / "a" / "metrics.csv") != slurp(dir / "b" / "metrics.csv")) {
    ok = false;
    why << " metrics.csv differs between identical 64-bit runs;";
  }
  if (slurp(dir / "a" / "checkpoint_final.ckpt") !=
      slurp(dir / "b" / "checkpoint_final.ckpt")) {
    ok = false;
    why << " final checkpoints differ between identical 64-bit runs;";
  }

  // Checkpoint round trip is bit-exact.
  cfg.model.init_seed = 5;
  Params<double> p = init_params<double>(cfg.model);
  fs::path c1 = dir / "rt1.ckpt", c2 = dir / "rt2.ckpt";
  save_checkpoint(c1.string(), p);
  Params<double> q = load_checkpoint<double>(c1.string(), cfg.model);
  save_checkpoint(c2.string(), q);
  if (slurp(c1) != slurp(c2)) {
    ok = false;
    why << " checkpoint round trip not bit-exact;";
  }

  report(8, ok,
         ok ? "identical seeds give bitwise-identical 64-bit metrics and "
              "checkpoints; checkpoint round trip is bit-exact"
            : "determinism failed:" + why.str());
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> criteria;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--criteria" && i + 1 < argc) {
      std::istringstream list(argv[++i]);
      std::string tok;
      while (std::getline(list, tok, ',')) criteria.push_back(std::stoi(tok));
    } else if (arg == "--out" && i + 1 < argc) {
      g_out = argv[++i];
    } else if (arg == "--help" || arg == "-h") {
      std::cout << "usage: acceptance [--criteria 1,2,...] [--out DIR]\n"
                   "criteria default to 1,2,3,4,5,6,8 (7 is a long-running\n"
                   "negative control, run it explicitly)\n";
      return 0;
    } else {
      std::cerr << "unknown argument: " << arg << "\n";
      return 2;
    }
  }
  if (criteria.empty()) criteria = {1, 2, 3, 4, 5, 6, 8};

  fs::create_directories(g_out);
  int failures = 0;
  for (int c : criteria) {
    bool ok = false;
    switch (c) {
      case 1: ok = criterion1(); break;
      case 2: ok = criterion2(); break;
      case 3: ok = criterion3(); break;
      case 4: ok = criterion4(); break;
      case 5: ok = criterion5(); break;
      case 6: ok = criterion6(); break;
      case 7: ok = criterion7(); break;
      case 8: ok = criterion8(); break;
      default:
        std::cerr << "unknown criterion " << c << "\n";
        return 2;
    }
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
