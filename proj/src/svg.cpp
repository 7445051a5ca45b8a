#include "balreg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace balreg {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMargin = 48;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Bounds {
  double x_lo = std::numeric_limits<double>::infinity();
  double x_hi = -std::numeric_limits<double>::infinity();
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();

  void include(double x, double y) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  void pad() {
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;
    const double dx = 0.04 * (x_hi - x_lo), dy = 0.04 * (y_hi - y_lo);
    x_lo -= dx; x_hi += dx; y_lo -= dy; y_hi += dy;
  }
  double px(double x) const {
    return kMargin + (x - x_lo) / (x_hi - x_lo) * (kWidth - 2 * kMargin);
  }
  double py(double y) const {
    return kHeight - kMargin - (y - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin);
  }
};

void header(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
}

}  // namespace

std::string svg_line_chart(const std::vector<std::vector<std::pair<double, double>>>& series,
                           const std::vector<std::string>& names, const std::string& title) {
  Bounds bounds;
  for (const auto& line : series)
    for (const auto& [x, y] : line) bounds.include(x, y);
  bounds.pad();

  std::ostringstream out;
  header(out, title);
  for (size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 6]
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[s]) out << bounds.px(x) << ',' << bounds.py(y) << ' ';
    out << "\"/>\n";
    if (s < names.size())
      out << "<text x=\"" << kWidth - kMargin - 120 << "\" y=\"" << 40 + 16 * s
          << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << kPalette[s % 6]
          << "\">" << names[s] << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_histogram(const std::vector<std::pair<double, double>>& bars,
                          const std::string& title) {
  Bounds bounds;
  for (const auto& [x, y] : bars) {
    bounds.include(x, 0.0);
    bounds.include(x, y);
  }
  bounds.pad();

  const double bar_w =
      bars.size() > 1 ? (kWidth - 2.0 * kMargin) / static_cast<double>(bars.size()) : 10.0;
  std::ostringstream out;
  header(out, title);
  for (const auto& [x, y] : bars) {
    const double top = bounds.py(y);
    const double base = bounds.py(0.0);
    out << "<rect x=\"" << bounds.px(x) - 0.45 * bar_w << "\" y=\"" << std::min(top, base)
        << "\" width=\"" << 0.9 * bar_w << "\" height=\"" << std::abs(base - top)
        << "\" fill=\"#1f77b4\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace balreg
