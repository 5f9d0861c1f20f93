// SPDX-License-Identifier: Apache-2.0
#include "groklab/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "groklab/common.hpp"

namespace groklab {

namespace {

constexpr double kWidth = 860, kHeight = 520;
constexpr double kLeft = 70, kRight = 830, kTop = 50, kBottom = 460;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

RunSeries load_accuracy_series(const std::string& metrics_csv_path,
                               const std::string& label) {
  std::ifstream in(metrics_csv_path);
  if (!in) throw IoError("cannot open metrics csv: " + metrics_csv_path);
  RunSeries s;
  s.label = label;
  std::string line;
  if (!std::getline(in, line)) return s;  // empty file -> empty series
  // header: epoch,train_loss,test_loss,train_acc,test_acc,res_norm,max_logit
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) continue;
    s.points.emplace_back(std::stoi(cells[0]), std::stod(cells[4]));
  }
  return s;
}

std::string accuracy_svg(const std::vector<RunSeries>& series,
                         std::optional<int> x_max, const std::string& title) {
  int max_epoch = 1;
  for (const auto& s : series) {
    for (const auto& [e, a] : s.points) max_epoch = std::max(max_epoch, e);
  }
  if (x_max) max_epoch = *x_max;

  auto px = [&](double epoch) {
    return kLeft + (kRight - kLeft) * epoch / max_epoch;
  };
  auto py = [&](double acc) { return kBottom - (kBottom - kTop) * acc; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (kWidth / 2)
      << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">"
      << title << "</text>\n";

  // Axes.
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\""
      << kRight << "\" y2=\"" << kBottom
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  // y ticks at 0, 0.25, ..., 1.
  for (int i = 0; i <= 4; ++i) {
    double acc = i * 0.25;
    double y = py(acc);
    svg << "<line x1=\"" << (kLeft - 5) << "\" y1=\"" << fmt(y) << "\" x2=\""
        << kLeft << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << (kLeft - 10) << "\" y=\"" << fmt(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt(acc) << "</text>\n";
  }
  // x ticks: 5 divisions.
  for (int i = 0; i <= 5; ++i) {
    double e = max_epoch * i / 5.0;
    double x = px(e);
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << kBottom << "\" x2=\""
        << fmt(x) << "\" y2=\"" << (kBottom + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << (kBottom + 20)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << static_cast<long>(e) << "</text>\n";
  }
  svg << "<text x=\"" << ((kLeft + kRight) / 2) << "\" y=\"" << (kBottom + 45)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">epoch</text>\n";

  // Polylines.
  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))];
    std::ostringstream pts;
    bool any = false;
    for (const auto& [e, a] : s.points) {
      if (e > max_epoch) break;
      if (any) pts << " ";
      pts << fmt(px(e)) << "," << fmt(py(a));
      any = true;
    }
    if (!any) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    // Legend entry.
    double ly = kTop + 18.0 * static_cast<double>(si);
    svg << "<line x1=\"" << (kRight - 180) << "\" y1=\"" << fmt(ly)
        << "\" x2=\"" << (kRight - 150) << "\" y2=\"" << fmt(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << (kRight - 144) << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string combined_accuracy_csv(const std::vector<RunSeries>& series) {
  std::string out = "label,epoch,test_acc\n";
  char buf[64];
  for (const auto& s : series) {
    for (const auto& [e, a] : s.points) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.17g\n", s.label.c_str(), e, a);
      out += buf;
    }
  }
  return out;
}

}  // namespace groklab
