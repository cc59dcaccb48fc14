#pragma once

#include <string>
#include <vector>

namespace cch {

/// One polyline of a chart; x and y must have equal, nonzero length.
struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Renders a self-contained SVG line chart: axes with tick labels, a legend,
/// one polyline plus markers per series. No external assets, valid XML.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<ChartSeries>& series, int width = 720,
                              int height = 480);

}  // namespace cch
