#pragma once

#include <string>
#include <vector>

namespace ssdg::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line chart, one polyline per series.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

struct Bar {
  std::string label;
  double value = 0.0;
};

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<Bar>& bars);

}  // namespace ssdg::svg
