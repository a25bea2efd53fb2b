#pragma once

#include <opencv2/core.hpp>

#include "sfda/image.hpp"

namespace sfda {

// RGB <-> OpenCV BGR 8-bit conversions, used only at the I/O and drawing
// boundaries; all internal math stays on [0,1] doubles.

inline cv::Mat to_mat_bgr8(const Image& img) {
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        double v = img.channels == 3 ? img.at(y, x, c) : img.at(y, x, 0);
        px[2 - c] = static_cast<unsigned char>(
            std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  return m;
}

inline Image from_mat_bgr8(const cv::Mat& m) {
  Image img(m.rows, m.cols, 3);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = px[2 - c] / 255.0;
    }
  return img;
}

}  // namespace sfda
