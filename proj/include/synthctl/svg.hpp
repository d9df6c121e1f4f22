#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "synthctl/error.hpp"

// Deterministic standalone SVG charts in the style of the study figures:
// treated solid, synthetic dashed, placebo gaps in light strokes, a dashed
// vertical rule at t0, and a horizontal bar chart of RMSPE ratios.

namespace synthctl::svg {

enum class SeriesRole { Treated, Synthetic, Placebo };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  SeriesRole role = SeriesRole::Treated;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::optional<double> vertical_rule;
  bool zero_line = false;
};

struct Bar {
  std::string label;
  double value = 0.0;  // may be +inf
  bool highlight = false;
};

namespace detail {

inline constexpr double kWidth = 640;
inline constexpr double kHeight = 400;
inline constexpr double kLeft = 70;
inline constexpr double kRight = 20;
inline constexpr double kTop = 40;
inline constexpr double kBottom = 50;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s(buf);
  return s == "-0.00" ? "0.00" : s;
}

inline std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string header(std::string_view title) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n"
      "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"320.00\" y=\"24.00\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  return out;
}

inline std::string line(double x1, double y1, double x2, double y2, std::string_view stroke,
                        std::string_view extra = "") {
  std::string out = "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
                    "\" y2=\"" + num(y2) + "\" stroke=\"" + std::string(stroke) + "\"";
  if (!extra.empty()) out += " " + std::string(extra);
  return out + "/>\n";
}

inline std::string text(double x, double y, std::string_view anchor, std::string_view body,
                        int size = 11) {
  return "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" text-anchor=\"" + std::string(anchor) +
         "\" font-family=\"sans-serif\" font-size=\"" + std::to_string(size) + "\">" +
         escape(body) + "</text>\n";
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 1, hi += 1;
  }
};

}  // namespace detail

/// Line chart; one <polyline> per series, placebos drawn first.
inline std::string emit_svg(const LineChart& chart) {
  using namespace detail;
  if (chart.series.empty()) throw Error(ErrorKind::EmptySeries, "chart '" + chart.title + "' has no series");
  Range xr, yr;
  for (const auto& s : chart.series) {
    if (s.x.empty() || s.x.size() != s.y.size()) {
      throw Error(ErrorKind::EmptySeries, "series '" + s.label + "' is empty or ragged");
    }
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  if (chart.vertical_rule) xr.add(*chart.vertical_rule);
  if (chart.zero_line) yr.add(0.0);
  xr.pad();
  yr.pad();

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * plot_h; };

  std::string out = header(chart.title);
  out += line(kLeft, kTop + plot_h, kLeft + plot_w, kTop + plot_h, "#000000");
  out += line(kLeft, kTop, kLeft, kTop + plot_h, "#000000");
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    out += text(px(xv), kTop + plot_h + 16, "middle", num(xv));
    out += text(kLeft - 6, py(yv) + 4, "end", num(yv));
  }
  out += text(kLeft + plot_w / 2, kHeight - 10, "middle", chart.x_label);
  out += text(14, kTop + plot_h / 2, "middle", chart.y_label);
  if (chart.zero_line) out += line(kLeft, py(0.0), kLeft + plot_w, py(0.0), "#888888");
  if (chart.vertical_rule) {
    out += line(px(*chart.vertical_rule), kTop, px(*chart.vertical_rule), kTop + plot_h, "#555555",
                "stroke-dasharray=\"4 4\"");
  }

  auto polyline = [&](const Series& s) {
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    std::string style;
    switch (s.role) {
      case SeriesRole::Placebo: style = "stroke=\"#bbbbbb\" stroke-width=\"1\""; break;
      case SeriesRole::Synthetic: style = "stroke=\"#000000\" stroke-width=\"2\" stroke-dasharray=\"6 4\""; break;
      case SeriesRole::Treated: style = "stroke=\"#000000\" stroke-width=\"2\""; break;
    }
    return "<polyline fill=\"none\" " + style + " points=\"" + points + "\"><title>" +
           escape(s.label) + "</title></polyline>\n";
  };
  for (const auto& s : chart.series) {
    if (s.role == SeriesRole::Placebo) out += polyline(s);
  }
  for (const auto& s : chart.series) {
    if (s.role != SeriesRole::Placebo) out += polyline(s);
  }
  return out + "</svg>\n";
}

/// Horizontal bar chart in the given order; infinite values fill the axis
/// and are labeled "inf".
inline std::string emit_bar_svg(const std::string& title, const std::vector<Bar>& bars) {
  using namespace detail;
  if (bars.empty()) throw Error(ErrorKind::EmptySeries, "bar chart '" + title + "' has no bars");
  double top = 0.0;
  for (const auto& b : bars) {
    if (std::isfinite(b.value)) top = std::max(top, b.value);
  }
  if (top <= 0) top = 1.0;
  top *= 1.1;

  const double label_w = 130;
  const double plot_w = kWidth - kLeft - label_w - kRight;
  const double row_h = (kHeight - kTop - kBottom) / static_cast<double>(bars.size());
  const double x0 = kLeft + label_w - 60;

  std::string out = header(title);
  out += line(x0, kTop, x0, kTop + row_h * static_cast<double>(bars.size()), "#000000");
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double y = kTop + row_h * static_cast<double>(i);
    const double value = std::isfinite(b.value) ? std::max(b.value, 0.0) : top;
    const double w = value / top * plot_w;
    out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y + row_h * 0.15) + "\" width=\"" + num(w) +
           "\" height=\"" + num(row_h * 0.7) + "\" fill=\"" +
           (b.highlight ? "#000000" : "#bbbbbb") + "\"/>\n";
    out += text(x0 - 6, y + row_h * 0.5 + 4, "end", b.label);
    out += text(x0 + w + 4, y + row_h * 0.5 + 4, "start",
                std::isfinite(b.value) ? num(b.value) : "inf");
  }
  out += text(x0 + plot_w / 2, kHeight - 10, "middle", "post/pre RMSPE ratio");
  return out + "</svg>\n";
}

}  // namespace synthctl::svg
