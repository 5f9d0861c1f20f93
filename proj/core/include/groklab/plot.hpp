// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace groklab {

struct RunSeries {
  std::string label;
  std::vector<std::pair<int, double>> points;  // (epoch, test accuracy)
};

/// Parses a metrics CSV written by the training loop; extracts
/// (epoch, test_acc) pairs.
RunSeries load_accuracy_series(const std::string& metrics_csv_path,
                               const std::string& label);

/// Standalone SVG line chart of test accuracy vs epoch. x_max, when given,
/// caps the horizontal axis (early-window view). Output bytes are
/// deterministic for identical inputs.
std::string accuracy_svg(const std::vector<RunSeries>& series,
                         std::optional<int> x_max = std::nullopt,
                         const std::string& title = "Test accuracy");

/// Long-form CSV combining several runs: label,epoch,test_acc.
std::string combined_accuracy_csv(const std::vector<RunSeries>& series);

}  // namespace groklab
