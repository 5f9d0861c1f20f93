// SPDX-License-Identifier: Apache-2.0
#pragma once

// Spectral verification of a trained modular-addition model: DFT of the
// effective logit map, top-frequency logit ablation, and fraction of
// activation variance explained by the ideal trigonometric regressors.

#include <string>
#include <utility>
#include <vector>

#include "groklab/model.hpp"
#include "groklab/tasks.hpp"
#include "groklab/tensor.hpp"

namespace groklab {

struct FrequencyFve {
  int k;
  double fve_u;  // cos(omega_k (a+b)) regressor
  double fve_v;  // sin(omega_k (a+b)) regressor
};

struct SpectralReport {
  int p = 0;
  std::vector<std::pair<int, double>> top_frequencies;  // (k, energy)
  double ablation_accuracy = 0.0;
  double plain_accuracy = 0.0;
  std::vector<FrequencyFve> fve;
  bool grokked = false;
  double grok_threshold = 0.99;
};

/// W_L: for each of the p numeric output classes, each MLP neuron's logit
/// contribution (p x d_mlp). In bounded-cosine mode the column-normalized
/// unembedding actually used at inference enters the composition.
Tensor<double> effective_logit_map(const Params<double>& params,
                                   const ModelConfig& cfg);

/// Per-frequency spectral energy of W_L along the class axis: squared DFT
/// magnitudes summed over neurons, DC excluded. Conjugate pairs count once.
std::vector<double> frequency_energies(const Tensor<double>& wl);

/// Top n frequencies by energy, descending.
std::vector<std::pair<int, double>> top_frequencies(const Tensor<double>& wl,
                                                    int n = 5);

/// Test accuracy after projecting each example's numeric-class logits onto
/// span{1, cos(2 pi k c / p), sin(2 pi k c / p) : k in freqs}.
double frequency_ablation_accuracy(const Params<double>& params,
                                   const ModelConfig& cfg,
                                   const TaskDataset& ds,
                                   const std::vector<int>& freqs);

/// Fraction of total centered MLP-activation variance captured by the unit
/// regressors cos(omega_k (a+b)) and sin(omega_k (a+b)) over all p^2 inputs.
std::pair<double, double> fve(const Params<double>& params,
                              const ModelConfig& cfg, const TaskDataset& ds,
                              int k);

SpectralReport spectral_report(const Params<double>& params,
                               const ModelConfig& cfg, const TaskDataset& ds,
                               int top_n = 5, double grok_threshold = 0.99);

std::string spectral_report_json(const SpectralReport& r);

/// CSV of the full per-frequency energy spectrum: k,energy.
std::string spectrum_csv(const Tensor<double>& wl);

}  // namespace groklab
