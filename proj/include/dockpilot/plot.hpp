#pragma once

#include <array>
#include <string>
#include <vector>

namespace dockpilot {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // scatter instead of a polyline
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool equal_aspect = false;
  /// Optional axis-aligned rectangles drawn under the data, [x0, y0, x1, y1].
  std::vector<std::array<double, 4>> boxes;
};

/// Static SVG with axes, ticks and a legend. Output depends only on the spec.
std::string render_svg(const PlotSpec& spec);

}  // namespace dockpilot
