#include "sfda/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sfda/errors.hpp"

namespace sfda {

namespace {
constexpr int kW = 640, kH = 480;
constexpr int kMargin = 60;

double map_x(double x, double xmin, double xmax) {
  return kMargin + (x - xmin) / (xmax - xmin) * (kW - 2 * kMargin);
}
double map_y(double y, double ymin, double ymax) {
  return kH - kMargin - (y - ymin) / (ymax - ymin) * (kH - 2 * kMargin);
}

void svg_header(std::ofstream& out, const std::string& title,
                const std::string& xlabel, const std::string& ylabel) {
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kW
      << "' height='" << kH << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << kW / 2 << "' y='24' text-anchor='middle' "
      << "font-size='16'>" << title << "</text>\n"
      << "<text x='" << kW / 2 << "' y='" << kH - 12
      << "' text-anchor='middle' font-size='12'>" << xlabel << "</text>\n"
      << "<text x='16' y='" << kH / 2
      << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
      << kH / 2 << ")'>" << ylabel << "</text>\n"
      << "<rect x='" << kMargin << "' y='" << kMargin << "' width='"
      << kW - 2 * kMargin << "' height='" << kH - 2 * kMargin
      << "' fill='none' stroke='black'/>\n";
}

void axis_ticks(std::ofstream& out, double xmin, double xmax, double ymin,
                double ymax) {
  for (int i = 0; i <= 4; ++i) {
    double xv = xmin + (xmax - xmin) * i / 4.0;
    double yv = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x='" << map_x(xv, xmin, xmax) << "' y='" << kH - kMargin + 16
        << "' text-anchor='middle' font-size='10'>" << xv << "</text>\n"
        << "<text x='" << kMargin - 8 << "' y='" << map_y(yv, ymin, ymax) + 4
        << "' text-anchor='end' font-size='10'>" << yv << "</text>\n";
  }
}
}  // namespace

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ScatterPoint>& points, double xmin,
                       double xmax, double ymin, double ymax) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write plot: " + path);
  svg_header(out, title, xlabel, ylabel);
  axis_ticks(out, xmin, xmax, ymin, ymax);
  for (const ScatterPoint& p : points) {
    double px = map_x(std::clamp(p.x, xmin, xmax), xmin, xmax);
    double py = map_y(std::clamp(p.y, ymin, ymax), ymin, ymax);
    out << "<circle cx='" << px << "' cy='" << py
        << "' r='5' fill='steelblue'/>\n"
        << "<text x='" << px + 8 << "' y='" << py - 6
        << "' font-size='11'>" << p.label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::vector<Series>& series) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write plot: " + path);

  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmin >= xmax) { xmin -= 1; xmax += 1; }
  if (ymin >= ymax) { ymin -= 1; ymax += 1; }

  svg_header(out, title, xlabel, ylabel);
  axis_ticks(out, xmin, xmax, ymin, ymax);
  const char* colors[] = {"steelblue", "firebrick", "seagreen", "darkorange",
                          "purple"};
  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    out << "<polyline fill='none' stroke='" << colors[si % 5]
        << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << map_x(s.x[i], xmin, xmax) << "," << map_y(s.y[i], ymin, ymax)
          << " ";
    out << "'/>\n";
    out << "<text x='" << kW - kMargin - 4 << "' y='"
        << kMargin + 16 + 14 * si << "' text-anchor='end' font-size='11' fill='"
        << colors[si % 5] << "'>" << s.name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace sfda
