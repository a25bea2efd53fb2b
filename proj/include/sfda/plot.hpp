#pragma once

#include <string>
#include <vector>

namespace sfda {

/// Minimal static SVG emitters for the run-directory plots.

struct ScatterPoint {
  double x = 0, y = 0;
  std::string label;
};

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ScatterPoint>& points, double xmin,
                       double xmax, double ymin, double ymax);

struct Series {
  std::string name;
  std::vector<double> x, y;
};

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series);

}  // namespace sfda
