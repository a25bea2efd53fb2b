#include "sfda/image.hpp"

#include <algorithm>
#include <cmath>

namespace sfda {

Image resize(const Image& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw InvalidSpecError("resize: non-positive output shape");
  if (out_h == img.height && out_w == img.width) return img;

  Image out(out_h, out_w, img.channels);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    // Align sample centers (half-pixel convention).
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        double top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        double bot = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image rotate90(const Image& img, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return img;
  int h = img.height, w = img.width;
  Image out(k == 2 ? h : w, k == 2 ? w : h, img.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int ny, nx;
      if (k == 1) {  // 90 cw: (y,x) -> (x, h-1-y)
        ny = x;
        nx = h - 1 - y;
      } else if (k == 2) {
        ny = h - 1 - y;
        nx = w - 1 - x;
      } else {  // 270 cw
        ny = w - 1 - x;
        nx = y;
      }
      for (int c = 0; c < img.channels; ++c)
        out.at(ny, nx, c) = img.at(y, x, c);
    }
  }
  return out;
}

}  // namespace sfda
