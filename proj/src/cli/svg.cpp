#include "capsroute/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace capsroute::cli {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 48.0;

const char* colour(std::size_t k) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[k % (sizeof palette / sizeof palette[0])];
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;

  double px(double x) const {
    return kMargin + (x1 == x0 ? 0.5 : (x - x0) / (x1 - x0)) * (kWidth - 2 * kMargin);
  }
  double py(double y) const {
    return kHeight - kMargin - (y1 == y0 ? 0.5 : (y - y0) / (y1 - y0)) * (kHeight - 2 * kMargin);
  }
};

std::string header(const std::string& title, const Frame& f) {
  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
      num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(title) + "</text>\n";
  out += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" +
         num(kWidth - 2 * kMargin) + "\" height=\"" + num(kHeight - 2 * kMargin) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.3g", f.y1);
  out += "<text x=\"4\" y=\"" + num(kMargin + 4) + "\" font-size=\"10\">" + buf + "</text>\n";
  std::snprintf(buf, sizeof buf, "%.3g", f.y0);
  out += "<text x=\"4\" y=\"" + num(kHeight - kMargin) + "\" font-size=\"10\">" + buf + "</text>\n";
  return out;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::vector<NamedSeries>& series) {
  Frame f{0.0, 1.0, std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  for (const auto& s : series) {
    f.x1 = std::max(f.x1, static_cast<double>(s.values.size()) - 1.0);
    for (double v : s.values) {
      f.y0 = std::min(f.y0, v);
      f.y1 = std::max(f.y1, v);
    }
  }
  if (!std::isfinite(f.y0)) f.y0 = f.y1 = 0.0;

  std::string out = header(title, f);
  for (std::size_t k = 0; k < series.size(); ++k) {
    out += "<polyline fill=\"none\" stroke=\"" + std::string(colour(k)) + "\" points=\"";
    for (std::size_t r = 0; r < series[k].values.size(); ++r) {
      out += num(f.px(static_cast<double>(r))) + "," + num(f.py(series[k].values[r])) + " ";
    }
    out += "\"/>\n";
    out += "<text x=\"" + num(kWidth - kMargin + 4) + "\" y=\"" +
           num(kMargin + 12.0 * static_cast<double>(k)) + "\" font-size=\"9\" fill=\"" +
           colour(k) + "\">" + escape(series[k].name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string svg_scatter_plot(const std::string& title, const std::vector<ScatterPoint>& points,
                             const std::vector<ScatterPoint>& markers) {
  double extent = 1.0;
  for (const auto* set : {&points, &markers}) {
    for (const auto& p : *set) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  }
  extent *= 1.1;
  const Frame f{-extent, extent, -extent, extent};

  std::string out = header(title, f);
  out += "<circle cx=\"" + num(f.px(0)) + "\" cy=\"" + num(f.py(0)) + "\" r=\"" +
         num(f.px(1) - f.px(0)) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  for (const auto& p : points) {
    out += "<circle cx=\"" + num(f.px(p.x)) + "\" cy=\"" + num(f.py(p.y)) +
           "\" r=\"3\" fill=\"none\" stroke=\"" + colour(p.capsule) + "\"/>\n";
  }
  for (const auto& p : markers) {
    out += "<text x=\"" + num(f.px(p.x)) + "\" y=\"" + num(f.py(p.y) + 6) +
           "\" text-anchor=\"middle\" font-size=\"18\" fill=\"" + colour(p.capsule) +
           "\">*</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace capsroute::cli
