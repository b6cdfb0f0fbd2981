#include "cuot/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cuot/checkpoint.hpp"

namespace cuot::plot {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

struct Extent {
  double x0, x1, y0, y1;
};

Extent data_extent(const std::vector<ScatterSeries>& series) {
  Extent e{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
           std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
  for (const auto& s : series) {
    for (size_t i = 0; i < s.points->size(); ++i) {
      e.x0 = std::min(e.x0, s.points->y[i]);  // y coordinate drawn on the horizontal axis
      e.x1 = std::max(e.x1, s.points->y[i]);
      e.y0 = std::min(e.y0, s.points->x[i]);
      e.y1 = std::max(e.y1, s.points->x[i]);
    }
  }
  const double mx = 0.05 * std::max(1e-9, e.x1 - e.x0);
  const double my = 0.05 * std::max(1e-9, e.y1 - e.y0);
  return {e.x0 - mx, e.x1 + mx, e.y0 - my, e.y1 + my};
}

}  // namespace

void write_scatter_svg(const std::string& path, const std::vector<ScatterSeries>& series,
                       const std::string& title, int width, int height) {
  if (series.empty()) throw std::invalid_argument("write_scatter_svg: no series");
  for (const auto& s : series)
    if (!s.points || s.points->size() == 0)
      throw std::invalid_argument("write_scatter_svg: empty series");

  const Extent e = data_extent(series);
  const double pad = 34;
  auto sx = [&](double v) {
    return pad + (v - e.x0) / (e.x1 - e.x0) * (width - 2 * pad);
  };
  auto sy = [&](double v) {
    return height - pad - (v - e.y0) / (e.y1 - e.y0) * (height - 2 * pad);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  double legend_y = 36;
  for (const auto& s : series) {
    svg << "<g fill=\"" << s.color << "\" fill-opacity=\"0.55\">\n";
    for (size_t i = 0; i < s.points->size(); ++i)
      svg << "<circle cx=\"" << fmt(sx(s.points->y[i])) << "\" cy=\""
          << fmt(sy(s.points->x[i])) << "\" r=\"" << fmt(s.radius) << "\"/>\n";
    svg << "</g>\n";
    if (!s.label.empty()) {
      svg << "<circle cx=\"" << width - 120 << "\" cy=\"" << fmt(legend_y) << "\" r=\"4\" fill=\""
          << s.color << "\"/>\n";
      svg << "<text x=\"" << width - 110 << "\" y=\"" << fmt(legend_y + 4)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
      legend_y += 18;
    }
  }
  svg << "</svg>\n";
  write_file_atomic(path, svg.str());
}

void write_heatmap_svg(const std::string& path, const metrics::KdeGrid& grid,
                       const std::string& title, int width, int height) {
  if (grid.density.empty()) throw std::invalid_argument("write_heatmap_svg: empty grid");
  double dmax = 0;
  for (double d : grid.density) dmax = std::max(dmax, d);
  if (dmax <= 0) throw std::invalid_argument("write_heatmap_svg: zero density grid");

  const double pad = 34;
  const double cw = (width - 2 * pad) / grid.res_x;
  const double ch = (height - 2 * pad) / grid.res_y;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  for (int iy = 0; iy < grid.res_y; ++iy) {
    for (int ix = 0; ix < grid.res_x; ++ix) {
      const double t = grid.at(iy, ix) / dmax;
      // Fixed white -> blue -> dark ramp.
      const int r = static_cast<int>(255 * (1.0 - t));
      const int gch = static_cast<int>(255 * (1.0 - 0.7 * t));
      const int b = static_cast<int>(255 * (1.0 - 0.25 * t));
      char color[10];
      std::snprintf(color, sizeof(color), "#%02x%02x%02x", r, gch, b);
      const double px = pad + ix * cw;
      // Row 0 is the lowest y value; flip so y grows upward.
      const double py = height - pad - (iy + 1) * ch;
      svg << "<rect x=\"" << fmt(px) << "\" y=\"" << fmt(py) << "\" width=\""
          << fmt(cw + 0.5) << "\" height=\"" << fmt(ch + 0.5) << "\" fill=\"" << color
          << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  write_file_atomic(path, svg.str());
}

}  // namespace cuot::plot
