#include "sfda/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"
#include "sfda/errors.hpp"

namespace fs = std::filesystem;

namespace sfda {

ShiftSpec parse_shift_spec(const std::string& text) {
  ShiftSpec spec;
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ConfigError("shift spec must be name:magnitude, got: " + text);
  spec.name = text.substr(0, colon);
  try {
    spec.magnitude = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad shift magnitude in: " + text);
  }
  if (spec.name != "color" && spec.name != "noise" && spec.name != "blur")
    throw ConfigError("unknown shift name: " + spec.name);
  if (spec.magnitude < 0.0 || spec.magnitude > 1.0)
    throw ConfigError("shift magnitude must be in [0,1]");
  return spec;
}

Dataset load_image_folder(const std::string& root, int image_h, int image_w) {
  if (!fs::is_directory(root))
    throw DatasetFormatError("dataset root is not a directory: " + root);

  std::vector<std::string> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path().filename().string());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty())
    throw DatasetFormatError("no class subdirectories under " + root);

  Dataset ds;
  ds.goal_classes = static_cast<int>(class_dirs.size());
  ds.domain_tag = fs::path(root).filename().string();
  for (int label = 0; label < ds.goal_classes; ++label) {
    fs::path dir = fs::path(root) / class_dirs[label];
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw DatasetFormatError("empty class directory: " + dir.string());
    for (const auto& f : files) {
      cv::Mat m = cv::imread(f.string(), cv::IMREAD_COLOR);
      if (m.empty())
        throw DatasetFormatError("unreadable image file: " + f.string());
      cv::Mat resized;
      cv::resize(m, resized, cv::Size(image_w, image_h), 0, 0,
                 cv::INTER_AREA);
      Sample s;
      s.id = class_dirs[label] + "/" + f.filename().string();
      s.image = from_mat_bgr8(resized);
      s.goal_label = label;
      ds.samples.push_back(std::move(s));
    }
  }
  ds.validate();
  return ds;
}

namespace {

/// Per-sample content latents; the target render reuses these so that a
/// zero-magnitude shift yields pixel-identical domains.
struct ShapeLatents {
  int shape = 0;
  double hue_jitter = 0, size = 0, cx = 0, cy = 0, angle = 0, bg = 0;
  double stroke_v = 0, sat = 1;
};

Image render_shape(int cls, int n_classes, const ShapeLatents& lat,
                   int image_size) {
  const int ss = 2;  // supersample factor
  int big = image_size * ss;
  cv::Mat canvas(big, big, CV_8UC3);

  double bg = 0.35 + 0.3 * lat.bg;
  canvas.setTo(cv::Scalar(bg * 255, bg * 255, bg * 255));

  // Two class cues: hue (easy, destroyed by the color shift) and shape
  // (robust, survives it). A source model leans on hue; adaptation has to
  // recover the shape cue.
  double hue = static_cast<double>(cls) / n_classes + 0.05 * lat.hue_jitter;
  double rgb[3];
  // Saturation varies per sample so hue is not always available; the
  // nearly-gray samples force a classifier to pick up the shape cue too.
  hsv_to_rgb(hue, 0.15 + 0.75 * lat.sat, 0.55 + 0.4 * lat.stroke_v, rgb);
  cv::Scalar color(rgb[2] * 255, rgb[1] * 255, rgb[0] * 255);

  double radius = big * (0.18 + 0.10 * lat.size);
  cv::Point center(static_cast<int>(big * (0.35 + 0.3 * lat.cx)),
                   static_cast<int>(big * (0.35 + 0.3 * lat.cy)));
  int shape = lat.shape;
  double ang = lat.angle * 2.0 * M_PI;

  auto poly_pt = [&](double a, double r) {
    return cv::Point(static_cast<int>(center.x + r * std::cos(a)),
                     static_cast<int>(center.y + r * std::sin(a)));
  };

  if (shape == 0) {
    cv::circle(canvas, center, static_cast<int>(radius), color, cv::FILLED);
  } else if (shape == 1) {
    std::vector<cv::Point> pts;
    for (int i = 0; i < 4; ++i)
      pts.push_back(poly_pt(ang + i * M_PI / 2.0 + M_PI / 4.0, radius * 1.2));
    cv::fillConvexPoly(canvas, pts, color);
  } else if (shape == 2) {
    std::vector<cv::Point> pts;
    for (int i = 0; i < 3; ++i)
      pts.push_back(poly_pt(ang + i * 2.0 * M_PI / 3.0, radius * 1.3));
    cv::fillConvexPoly(canvas, pts, color);
  } else {
    int thick = std::max(2, static_cast<int>(radius * 0.45));
    cv::line(canvas, poly_pt(ang, radius * 1.3),
             poly_pt(ang + M_PI, radius * 1.3), color, thick);
    cv::line(canvas, poly_pt(ang + M_PI / 2.0, radius * 1.3),
             poly_pt(ang - M_PI / 2.0, radius * 1.3), color, thick);
  }

  cv::Mat small;
  cv::resize(canvas, small, cv::Size(image_size, image_size), 0, 0,
             cv::INTER_AREA);
  Image out = from_mat_bgr8(small);

  // Global top-lit illumination gradient shared by the whole corpus. It
  // gives images a consistent vertical asymmetry (as natural lighting
  // does), so layout-destroying transforms are visible at the population
  // level while small local edits are not.
  for (int y = 0; y < image_size; ++y) {
    double light = 1.05 - 0.35 * static_cast<double>(y) / (image_size - 1);
    for (int x = 0; x < image_size; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = std::clamp(out.at(y, x, c) * light, 0.0, 1.0);
  }
  return out;
}

}  // namespace

Image apply_shift(const Image& img, const ShiftSpec& shift, Rng& rng) {
  double m = shift.magnitude;
  if (m == 0.0) return img;
  Image out = img;
  if (shift.name == "color") {
    // Desaturate toward luminance. The hue cue fades smoothly with
    // magnitude while shape stays intact, so a source model that leans on
    // color degrades gracefully instead of flipping classes. The mixing
    // fraction follows a concave response curve: hue stays readable until
    // most of the chroma is gone, so a linear mix leaves mid magnitudes
    // too easy.
    double mix = std::pow(m, 2.0 / 3.0);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double r = img.at(y, x, 0), g = img.at(y, x, 1), b = img.at(y, x, 2);
        double gray = (r + g + b) / 3.0;
        for (int c = 0; c < 3; ++c)
          out.at(y, x, c) = (1 - mix) * img.at(y, x, c) + mix * gray;
      }
  } else if (shift.name == "noise") {
    std::normal_distribution<double> noise(0.0, 0.25 * m);
    for (double& v : out.pixels) v += noise(rng);
    out.clamp01();
  } else {  // blur
    int radius = std::max(1, static_cast<int>(std::lround(m * 4.0)));
    cv::Mat src = to_mat_bgr8(img), dst;
    cv::blur(src, dst, cv::Size(2 * radius + 1, 2 * radius + 1));
    Image blurred = from_mat_bgr8(dst);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
      out.pixels[i] = (1 - m) * img.pixels[i] + m * blurred.pixels[i];
  }
  return out;
}

std::pair<Dataset, Dataset> make_synthetic_domain_pair(int n_classes,
                                                       int n_per_class,
                                                       const ShiftSpec& shift,
                                                       std::uint64_t seed,
                                                       int image_size) {
  if (n_classes < 2) throw ConfigError("need at least 2 classes");
  if (shift.name != "color" && shift.name != "noise" && shift.name != "blur")
    throw ConfigError("unknown shift name: " + shift.name);

  Dataset src, tgt;
  src.goal_classes = tgt.goal_classes = n_classes;
  src.domain_tag = "synthetic-source";
  tgt.domain_tag = "synthetic-target-" + shift.name;

  Rng lat_rng = make_rng(seed, "synthetic-latents");
  Rng shift_rng = make_rng(seed, "synthetic-shift");
  std::uniform_real_distribution<double> u(0.0, 1.0);

  for (int cls = 0; cls < n_classes; ++cls) {
    for (int i = 0; i < n_per_class; ++i) {
      ShapeLatents lat;
      lat.shape = cls % 4;
      lat.hue_jitter = u(lat_rng) - 0.5;
      lat.size = u(lat_rng);
      lat.cx = u(lat_rng);
      lat.cy = u(lat_rng);
      lat.angle = u(lat_rng);
      lat.bg = u(lat_rng);
      lat.stroke_v = u(lat_rng);
      lat.sat = u(lat_rng);
      Image base = render_shape(cls, n_classes, lat, image_size);

      std::string stem =
          "c" + std::to_string(cls) + "_" + std::to_string(i);
      Sample s;
      s.id = "src/" + stem;
      s.image = base;
      s.goal_label = cls;
      src.samples.push_back(std::move(s));

      Sample t;
      t.id = "tgt/" + stem;
      t.image = apply_shift(base, shift, shift_rng);
      t.goal_label = cls;  // held out for eval only; never used in training
      tgt.samples.push_back(std::move(t));
    }
  }
  src.validate();
  tgt.validate();
  return {std::move(src), std::move(tgt)};
}

void export_image_folder(const Dataset& ds, const std::string& root) {
  fs::create_directories(root);
  for (const Sample& s : ds.samples) {
    std::string cls = s.goal_label ? "class_" + std::to_string(*s.goal_label)
                                   : "_unlabeled";
    fs::path dir = fs::path(root) / cls;
    fs::create_directories(dir);
    std::string name = s.id;
    std::replace(name.begin(), name.end(), '/', '_');
    cv::imwrite((dir / (name + ".png")).string(), to_mat_bgr8(s.image));
  }
}

}  // namespace sfda
