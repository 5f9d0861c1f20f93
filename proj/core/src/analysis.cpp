// SPDX-License-Identifier: Apache-2.0
#include "groklab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "groklab/train.hpp"

namespace groklab {

namespace {

void require_mod_add(const ModelConfig& cfg, const TaskDataset* ds) {
  if (ds && ds->kind != TaskKind::ModAdd) {
    throw ConfigError("spectral analysis supports the modular-addition task "
                      "only");
  }
  if (ds && cfg.vocab_size != ds->vocab_size) {
    throw ConfigError("analysis: model vocab does not match dataset");
  }
}

}  // namespace

Tensor<double> effective_logit_map(const Params<double>& params,
                                   const ModelConfig& cfg) {
  int p = cfg.vocab_size - 1;  // numeric classes only
  int d_model = cfg.d_model, d_mlp = cfg.d_mlp;

  // Unembedding as used at inference.
  Tensor<double> u = params.w_unembed;  // d_model x vocab
  if (cfg.unembed_mode == UnembedMode::BoundedCosine) {
    for (int c = 0; c < cfg.vocab_size; ++c) {
      double ss = 0.0;
      for (int d = 0; d < d_model; ++d) ss += u(d, c) * u(d, c);
      double r = std::max(std::sqrt(ss), 1e-12);
      for (int d = 0; d < d_model; ++d) u(d, c) /= r;
    }
  }

  // wl[c][j] = sum_d w_out[j][d] * u[d][c]
  Tensor<double> wl = Tensor<double>::zeros({p, d_mlp});
  for (int c = 0; c < p; ++c) {
    for (int j = 0; j < d_mlp; ++j) {
      double acc = 0.0;
      for (int d = 0; d < d_model; ++d) acc += params.w_out(j, d) * u(d, c);
      wl(c, j) = acc;
    }
  }
  return wl;
}

std::vector<double> frequency_energies(const Tensor<double>& wl) {
  int p = wl.shape[0], d_mlp = wl.cols();
  if (p < 3) throw ConfigError("frequency_energies: p must be >= 3");
  int kmax = p / 2;
  std::vector<double> energy(static_cast<size_t>(kmax) + 1, 0.0);
  // Direct DFT; p is small (113) so O(p^2) per neuron is fine.
  std::vector<double> cos_tab(static_cast<size_t>(p)), sin_tab(p);
  for (int k = 1; k <= kmax; ++k) {
    for (int c = 0; c < p; ++c) {
      double phase = 2.0 * std::numbers::pi * k * c / p;
      cos_tab[c] = std::cos(phase);
      sin_tab[c] = std::sin(phase);
    }
    double e = 0.0;
    for (int j = 0; j < d_mlp; ++j) {
      double re = 0.0, im = 0.0;
      for (int c = 0; c < p; ++c) {
        re += wl(c, j) * cos_tab[c];
        im -= wl(c, j) * sin_tab[c];
      }
      e += re * re + im * im;
    }
    energy[k] = e;
  }
  return energy;
}

std::vector<std::pair<int, double>> top_frequencies(const Tensor<double>& wl,
                                                    int n) {
  int p = wl.shape[0];
  if (n < 1 || n > p / 2) {
    throw ConfigError("top_frequencies: n outside [1, floor(p/2)]");
  }
  std::vector<double> energy = frequency_energies(wl);
  std::vector<std::pair<int, double>> ranked;
  for (int k = 1; k <= p / 2; ++k) ranked.emplace_back(k, energy[k]);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  ranked.resize(static_cast<size_t>(n));
  return ranked;
}

double frequency_ablation_accuracy(const Params<double>& params,
                                   const ModelConfig& cfg,
                                   const TaskDataset& ds,
                                   const std::vector<int>& freqs) {
  require_mod_add(cfg, &ds);
  if (freqs.empty()) {
    throw ConfigError("frequency_ablation_accuracy: empty frequency list");
  }
  int p = ds.p;
  for (int k : freqs) {
    if (k < 1 || k > p / 2) {
      throw ConfigError("frequency_ablation_accuracy: frequency out of range");
    }
  }

  // Orthogonal basis over the class index grid: constant + selected tones.
  std::vector<std::vector<double>> basis;
  basis.push_back(std::vector<double>(static_cast<size_t>(p), 1.0));
  for (int k : freqs) {
    std::vector<double> ck(p), sk(p);
    for (int c = 0; c < p; ++c) {
      double phase = 2.0 * std::numbers::pi * k * c / p;
      ck[c] = std::cos(phase);
      sk[c] = std::sin(phase);
    }
    basis.push_back(std::move(ck));
    basis.push_back(std::move(sk));
  }
  std::vector<double> basis_ss;
  for (const auto& b : basis) {
    double ss = 0.0;
    for (double v : b) ss += v * v;
    basis_ss.push_back(ss);
  }

  std::vector<int> tokens, labels;
  collect_split(ds, ds.test_idx, tokens, labels);
  Tape<double> tape;
  auto ids = stage_params(tape, params, false);
  auto r = forward(tape, ids, cfg, tokens);
  const Tensor<double>& logits = tape.value(r.logits);

  int batch = logits.shape[0], vocab = logits.cols();
  int correct = 0;
  std::vector<double> proj(static_cast<size_t>(p));
  for (int i = 0; i < batch; ++i) {
    const double* row = &logits.data[static_cast<size_t>(i) * vocab];
    std::fill(proj.begin(), proj.end(), 0.0);
    for (size_t bi = 0; bi < basis.size(); ++bi) {
      if (basis_ss[bi] <= 0.0) continue;  // degenerate tone (k = p/2 sine)
      double dot = 0.0;
      for (int c = 0; c < p; ++c) dot += row[c] * basis[bi][c];
      double coef = dot / basis_ss[bi];
      for (int c = 0; c < p; ++c) proj[c] += coef * basis[bi][c];
    }
    int best = 0;
    for (int c = 1; c < p; ++c)
      if (proj[c] > proj[best]) best = c;
    if (best == labels[static_cast<size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / batch;
}

std::pair<double, double> fve(const Params<double>& params,
                              const ModelConfig& cfg, const TaskDataset& ds,
                              int k) {
  require_mod_add(cfg, &ds);
  int p = ds.p;
  if (k < 1 || k > p / 2) throw ConfigError("fve: k outside [1, floor(p/2)]");

  // Activations over the exhaustive grid, in dataset (a-major) order.
  std::vector<int> tokens;
  tokens.reserve(ds.size() * 3);
  for (const auto& s : ds.sequences) {
    tokens.push_back(s[0]);
    tokens.push_back(s[1]);
    tokens.push_back(s[2]);
  }
  Tensor<double> acts = mlp_activations(params, cfg, tokens);
  int n = acts.shape[0], d_mlp = acts.cols();

  // Mean-center each neuron.
  double total_ss = 0.0;
  for (int j = 0; j < d_mlp; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += acts(i, j);
    mean /= n;
    for (int i = 0; i < n; ++i) {
      acts(i, j) -= mean;
      total_ss += acts(i, j) * acts(i, j);
    }
  }
  if (total_ss <= 0.0) return {0.0, 0.0};  // zero-variance activations

  auto make_regressor = [&](bool use_sin) {
    std::vector<double> u(static_cast<size_t>(n));
    double omega = 2.0 * std::numbers::pi * k / p;
    for (int i = 0; i < n; ++i) {
      int a = ds.sequences[static_cast<size_t>(i)][0];
      int b = ds.sequences[static_cast<size_t>(i)][1];
      u[static_cast<size_t>(i)] =
          use_sin ? std::sin(omega * (a + b)) : std::cos(omega * (a + b));
    }
    double mean = 0.0;
    for (double v : u) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double& v : u) {
      v -= mean;
      ss += v * v;
    }
    double norm = std::sqrt(ss);
    if (norm > 0) {
      for (double& v : u) v /= norm;
    }
    return u;
  };

  auto explained = [&](const std::vector<double>& u) {
    double acc = 0.0;
    for (int j = 0; j < d_mlp; ++j) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += acts(i, j) * u[static_cast<size_t>(i)];
      acc += dot * dot;
    }
    return acc / total_ss;
  };

  return {explained(make_regressor(false)), explained(make_regressor(true))};
}

SpectralReport spectral_report(const Params<double>& params,
                               const ModelConfig& cfg, const TaskDataset& ds,
                               int top_n, double grok_threshold) {
  require_mod_add(cfg, &ds);
  SpectralReport rep;
  rep.p = ds.p;
  rep.grok_threshold = grok_threshold;

  Tensor<double> wl = effective_logit_map(params, cfg);
  rep.top_frequencies = top_frequencies(wl, top_n);

  std::vector<int> freqs;
  for (const auto& [k, e] : rep.top_frequencies) freqs.push_back(k);
  rep.ablation_accuracy = frequency_ablation_accuracy(params, cfg, ds, freqs);

  SplitMetrics m = evaluate(params, cfg, ds, ds.test_idx);
  rep.plain_accuracy = m.accuracy;
  rep.grokked = m.accuracy >= grok_threshold;

  for (int k : freqs) {
    auto [u, v] = fve(params, cfg, ds, k);
    rep.fve.push_back({k, u, v});
  }
  return rep;
}

std::string spectral_report_json(const SpectralReport& r) {
  nlohmann::json j;
  j["p"] = r.p;
  j["grokked"] = r.grokked;
  j["grok_threshold"] = r.grok_threshold;
  j["plain_accuracy"] = r.plain_accuracy;
  j["ablation_accuracy"] = r.ablation_accuracy;
  j["top_frequencies"] = nlohmann::json::array();
  for (const auto& [k, e] : r.top_frequencies) {
    j["top_frequencies"].push_back({{"k", k}, {"energy", e}});
  }
  j["fve"] = nlohmann::json::array();
  for (const auto& f : r.fve) {
    j["fve"].push_back({{"k", f.k}, {"fve_u", f.fve_u}, {"fve_v", f.fve_v}});
  }
  return j.dump(2) + "\n";
}

std::string spectrum_csv(const Tensor<double>& wl) {
  std::vector<double> energy = frequency_energies(wl);
  std::string out = "k,energy\n";
  for (size_t k = 1; k < energy.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    out += format_metric(energy[k]);
    out += '\n';
  }
  return out;
}

}  // namespace groklab
