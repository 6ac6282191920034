#pragma once

#include <string>
#include <vector>

namespace sitp {

struct PlotSeries {
  std::string label;
  std::vector<double> mean;
  std::vector<double> std;  // empty or same length as mean
};

struct LineChart {
  std::string title;
  std::string x_label = "iteration";
  std::string y_label = "general mean SR";
  double y_min = 0.0;
  double y_max = 1.0;
  std::vector<PlotSeries> series;
};

// Standalone SVG document: one line per series over a shaded mean +/- std
// band. Output depends only on the input values.
std::string render_svg(const LineChart& chart);

std::string xml_escape(const std::string& text);

}  // namespace sitp
