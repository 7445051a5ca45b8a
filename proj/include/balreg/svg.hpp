#ifndef BALREG_SVG_HPP
#define BALREG_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace balreg {

/// Minimal line chart: one polyline per series, auto-scaled axes.
std::string svg_line_chart(const std::vector<std::vector<std::pair<double, double>>>& series,
                           const std::vector<std::string>& names, const std::string& title);

/// Minimal bar chart from (center, mass) pairs.
std::string svg_histogram(const std::vector<std::pair<double, double>>& bars,
                          const std::string& title);

}  // namespace balreg

#endif  // BALREG_SVG_HPP
