#pragma once

#include <string>
#include <vector>

#include "cuot/metrics.hpp"

namespace cuot::plot {

struct ScatterSeries {
  const metrics::Points* points = nullptr;
  std::string color = "#1f77b4";
  double radius = 1.3;
  std::string label;
};

// Self-contained SVG scatter plot; rendering is deterministic (fixed number
// formatting, no timestamps). Throws on empty input, writes atomically.
void write_scatter_svg(const std::string& path, const std::vector<ScatterSeries>& series,
                       const std::string& title, int width = 640, int height = 640);

// KDE heatmap as an SVG grid of cells with a fixed color ramp.
void write_heatmap_svg(const std::string& path, const metrics::KdeGrid& grid,
                       const std::string& title, int width = 640, int height = 640);

}  // namespace cuot::plot
