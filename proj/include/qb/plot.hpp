#pragma once

// Minimal deterministic SVG line charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "qb/core/errors.hpp"

namespace qb {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<PlotSeries> series;
  int width = 800;
  int height = 500;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

}  // namespace detail

/// One <polyline> per series; axes, ticks and labels use other elements.
inline std::string render_svg(const PlotSpec& spec) {
  require(!spec.series.empty(), "plot needs at least one series");
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : spec.series) {
    require(!s.x.empty(), "plot series '" + s.name + "' is empty");
    require(s.x.size() == s.y.size(), "plot series '" + s.name + "' has unequal x and y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      require(std::isfinite(s.x[i]) && std::isfinite(s.y[i]), "plot series '" + s.name + "' has non-finite values");
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.y[i]);
      y_hi = std::max(y_hi, s.y[i]);
    }
  }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  using detail::svg_num;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
     << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << svg_num(left) << "\" y=\"" << svg_num(top) << "\" width=\"" << svg_num(pw) << "\" height=\""
     << svg_num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  char buf[32];
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * i / 4.0;
    std::snprintf(buf, sizeof buf, "%.4g", fx);
    os << "<text x=\"" << svg_num(px(fx)) << "\" y=\"" << svg_num(top + ph + 18)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.4g", fy);
    os << "<text x=\"" << svg_num(left - 6) << "\" y=\"" << svg_num(py(fy) + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  os << "<text x=\"" << svg_num(spec.width / 2.0) << "\" y=\"24\" font-size=\"15\" text-anchor=\"middle\">"
     << detail::svg_escape(spec.title) << "</text>\n";
  os << "<text x=\"" << svg_num(left + pw / 2) << "\" y=\"" << svg_num(spec.height - 10.0)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << detail::svg_escape(spec.xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << svg_num(top + ph / 2) << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << svg_num(top + ph / 2) << ")\">" << detail::svg_escape(spec.ylabel) << "</text>\n";
  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    os << "<polyline fill=\"none\" stroke=\"" << palette[k % 10] << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? " " : "") << svg_num(px(s.x[i])) << ',' << svg_num(py(s.y[i]));
    os << "\"><title>" << detail::svg_escape(s.name) << "</title></polyline>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qb
