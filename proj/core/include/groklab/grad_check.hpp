// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite-difference gradient checker. Always runs at 64-bit; central
// differences with step 1e-5 and relative error
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).

#include <algorithm>
#include <functional>
#include <vector>

#include "groklab/tape.hpp"
#include "groklab/tensor.hpp"

namespace groklab {

/// build(tape, leaf_ids) constructs a scalar-valued graph over leaves made
/// from `inputs` and returns the output id. Returns the max relative error
/// over all input coordinates. Throws NumericError if an analytic gradient
/// is non-finite.
inline double grad_check(
    const std::function<Tape<double>::Id(Tape<double>&,
                                         const std::vector<Tape<double>::Id>&)>&
        build,
    std::vector<Tensor<double>> inputs, double step = 1e-5) {
  // Analytic pass.
  std::vector<Tensor<double>> analytic;
  {
    Tape<double> tape;
    std::vector<Tape<double>::Id> ids;
    for (const auto& t : inputs) ids.push_back(tape.leaf(t, true));
    auto out = build(tape, ids);
    tape.backward(out);
    for (auto id : ids) {
      check_finite<double>(tape.grad(id).data, "grad_check");
      analytic.push_back(tape.grad(id));
    }
  }

  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    Tape<double> tape;
    std::vector<Tape<double>::Id> ids;
    for (const auto& t : xs) ids.push_back(tape.leaf(t, false));
    auto out = build(tape, ids);
    return tape.value(out).data[0];
  };

  double max_rel = 0.0;
  for (size_t t = 0; t < inputs.size(); ++t) {
    for (size_t i = 0; i < inputs[t].data.size(); ++i) {
      double orig = inputs[t].data[i];
      inputs[t].data[i] = orig + step;
      double fp = eval(inputs);
      inputs[t].data[i] = orig - step;
      double fm = eval(inputs);
      inputs[t].data[i] = orig;
      double numeric = (fp - fm) / (2.0 * step);
      double a = analytic[t].data[i];
      double rel = std::abs(a - numeric) /
                   std::max(1e-8, std::abs(a) + std::abs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace groklab
