#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace darp {

// A labelled polyline for the static chart output.
struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal static vector chart: axes, ticks, legend, one polyline per
// series. NaN points are skipped. Deterministic output for fixed input.
void write_line_chart(std::ostream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series);

}  // namespace darp
