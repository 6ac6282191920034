#include "sitp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sitp {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string render_svg(const LineChart& chart) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  std::size_t length = 1;
  for (const auto& s : chart.series) length = std::max(length, s.mean.size());
  const double y_span = chart.y_max > chart.y_min ? chart.y_max - chart.y_min : 1.0;

  auto x_of = [&](std::size_t i) {
    return kLeft + (length <= 1 ? 0.0 : plot_w * static_cast<double>(i) / static_cast<double>(length - 1));
  };
  auto y_of = [&](double v) {
    const double clamped = std::clamp(v, chart.y_min, chart.y_max);
    return kTop + plot_h * (1.0 - (clamped - chart.y_min) / y_span);
  };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) + "\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         xml_escape(chart.title) + "</text>\n";

  // Axes and horizontal grid.
  svg += "<g stroke=\"#999999\" stroke-width=\"1\">\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = chart.y_min + y_span * tick / 4.0;
    svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(y_of(v)) + "\" x2=\"" + fmt(kLeft + plot_w) + "\" y2=\"" +
           fmt(y_of(v)) + "\" stroke-opacity=\"0.3\"/>\n";
  }
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" + fmt(kLeft + plot_w) +
         "\" y2=\"" + fmt(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";
  svg += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = chart.y_min + y_span * tick / 4.0;
    svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(y_of(v) + 4) + "\" text-anchor=\"end\">" + fmt(v) +
           "</text>\n";
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const std::size_t i = (length - 1) * static_cast<std::size_t>(tick) / 4;
    svg += "<text x=\"" + fmt(x_of(i)) + "\" y=\"" + fmt(kTop + plot_h + 18) + "\" text-anchor=\"middle\">" +
           std::to_string(i + 1) + "</text>\n";
  }
  svg += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 15) + "\" text-anchor=\"middle\">" +
         xml_escape(chart.x_label) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt(kTop + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fmt(kTop + plot_h / 2) + ")\">" + xml_escape(chart.y_label) + "</text>\n";
  svg += "</g>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (series.mean.empty()) continue;
    if (series.std.size() == series.mean.size()) {
      std::string band;
      for (std::size_t i = 0; i < series.mean.size(); ++i) {
        band += fmt(x_of(i)) + "," + fmt(y_of(series.mean[i] + series.std[i])) + " ";
      }
      for (std::size_t i = series.mean.size(); i-- > 0;) {
        band += fmt(x_of(i)) + "," + fmt(y_of(series.mean[i] - series.std[i])) + (i == 0 ? "" : " ");
      }
      svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::string line;
    for (std::size_t i = 0; i < series.mean.size(); ++i) {
      line += fmt(x_of(i)) + "," + fmt(y_of(series.mean[i])) + (i + 1 == series.mean.size() ? "" : " ");
    }
    svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";

    const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
    svg += "<line x1=\"" + fmt(kWidth - kRight + 15) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(kWidth - kRight + 40) +
           "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(kWidth - kRight + 46) + "\" y=\"" + fmt(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(series.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace sitp
