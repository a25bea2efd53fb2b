#pragma once

#include <cstddef>
#include <vector>

#include "sfda/errors.hpp"

namespace sfda {

/// H x W x C image, float values in [0,1], row-major (y, x, c).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, fill) {}

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t size() const { return pixels.size(); }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  void clamp01() {
    for (double& v : pixels) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
};

/// Bilinear resize. Exact copy when the shape already matches.
Image resize(const Image& img, int out_h, int out_w);

/// Exact 90-degree rotations, k in {0,1,2,3}, counted clockwise.
Image rotate90(const Image& img, int k);

inline void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = h - static_cast<int>(h) + (h < 0 ? 1.0 : 0.0);
  double c = v * s;
  double hp = h * 6.0;
  int sector = static_cast<int>(hp) % 6;
  double frac = hp - static_cast<int>(hp);
  double xcomp = c * (1.0 - (sector % 2 == 0 ? 1.0 - frac : frac));
  double r = 0, g = 0, b = 0;
  switch (sector) {
    case 0: r = c; g = xcomp; break;
    case 1: r = xcomp; g = c; break;
    case 2: g = c; b = xcomp; break;
    case 3: g = xcomp; b = c; break;
    case 4: r = xcomp; b = c; break;
    default: r = c; b = xcomp; break;
  }
  double m = v - c;
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

}  // namespace sfda
