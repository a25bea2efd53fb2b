#include "sfda/sticker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"
#include "json.hpp"
#include "sfda/errors.hpp"

namespace sfda {

StickerTask parse_sticker_task(const std::string& name) {
  if (name == "location" || name == "sticker-loc") return StickerTask::Location;
  if (name == "rotation" || name == "sticker-rot") return StickerTask::Rotation;
  if (name == "classification" || name == "sticker-clsf")
    return StickerTask::Classification;
  throw ConfigError("unknown sticker task: " + name);
}

std::string sticker_task_name(StickerTask task) {
  switch (task) {
    case StickerTask::Location: return "location";
    case StickerTask::Rotation: return "rotation";
    default: return "classification";
  }
}

std::vector<char> select_glyphs(const StickerConfig& cfg) {
  if (cfg.n_glyphs < 1 || cfg.n_glyphs > 26)
    throw ConfigError("n_glyphs must be in [1, 26]");
  std::vector<char> alphabet(26);
  std::iota(alphabet.begin(), alphabet.end(), 'A');
  Rng rng = make_rng(cfg.glyph_seed, "glyph-subset");
  std::shuffle(alphabet.begin(), alphabet.end(), rng);
  alphabet.resize(cfg.n_glyphs);
  std::sort(alphabet.begin(), alphabet.end());
  return alphabet;
}

namespace {

/// Binary glyph footprint on a kGlyphCanvas^2 canvas (1 where drawn).
std::vector<std::uint8_t> glyph_bitmap(char letter) {
  cv::Mat canvas = cv::Mat::zeros(kGlyphCanvas, kGlyphCanvas, CV_8UC1);
  std::string text(1, letter);
  int font = cv::FONT_HERSHEY_SIMPLEX;
  double scale = 2.0;
  int thickness = 5;
  int baseline = 0;
  cv::Size sz = cv::getTextSize(text, font, scale, thickness, &baseline);
  // Scale the glyph to fill ~80% of the canvas.
  scale *= 0.8 * kGlyphCanvas / std::max(sz.width, sz.height);
  sz = cv::getTextSize(text, font, scale, thickness, &baseline);
  cv::Point org((kGlyphCanvas - sz.width) / 2,
                (kGlyphCanvas + sz.height) / 2);
  cv::putText(canvas, text, org, font, scale, cv::Scalar(255), thickness,
              cv::LINE_8);

  std::vector<std::uint8_t> bitmap(kGlyphCanvas * kGlyphCanvas, 0);
  for (int y = 0; y < kGlyphCanvas; ++y)
    for (int x = 0; x < kGlyphCanvas; ++x)
      bitmap[y * kGlyphCanvas + x] = canvas.at<std::uint8_t>(y, x) > 0;
  return bitmap;
}

double texture_value(int texture_index, int y, int x, Rng& noise_rng) {
  switch (texture_index % 4) {
    case 0:
      return 1.0;  // solid
    case 1:
      return 0.55 + 0.45 * std::sin(2.0 * M_PI * (x + y) / 9.0);  // stripes
    case 2: {  // dot lattice
      bool on = ((y / 5) + (x / 5)) % 2 == 0;
      return on ? 1.0 : 0.35;
    }
    default: {  // noise
      std::uniform_real_distribution<double> u(0.3, 1.0);
      return u(noise_rng);
    }
  }
}

constexpr double kMinGlyphValue = 1.0 / 255.0;

}  // namespace

Image textured_glyph_canvas(const StickerSpec& spec, const StickerConfig& cfg,
                            std::uint64_t seed) {
  std::vector<char> glyphs = select_glyphs(cfg);
  if (spec.glyph_index < 0 ||
      spec.glyph_index >= static_cast<int>(glyphs.size()))
    throw InvalidSpecError("glyph_index out of range");
  std::vector<std::uint8_t> bitmap = glyph_bitmap(glyphs[spec.glyph_index]);

  Rng noise_rng = make_rng(seed, "sticker-texture");
  Image canvas(kGlyphCanvas, kGlyphCanvas, 3);
  for (int y = 0; y < kGlyphCanvas; ++y)
    for (int x = 0; x < kGlyphCanvas; ++x) {
      if (!bitmap[y * kGlyphCanvas + x]) continue;
      double t = texture_value(spec.texture_index, y, x, noise_rng);
      for (int c = 0; c < 3; ++c) {
        // Keep every footprint pixel strictly nonzero so the mask
        // m(u) = 1(x_n(u) != 0) recovers the glyph exactly.
        double v = std::clamp(spec.color[c] * t, 0.0, 1.0);
        canvas.at(y, x, c) = std::max(v, kMinGlyphValue);
      }
    }
  return canvas;
}

Image place_canvas(const Image& canvas, const StickerSpec& spec, int h, int w) {
  if (h < 32 || w < 32)
    throw InvalidSpecError("sticker intervention requires H, W >= 32");
  Image rotated = rotate90(canvas, spec.rotation_class);
  int side = static_cast<int>(std::lround(spec.scale * std::min(h, w)));
  if (side < 2) throw InvalidSpecError("sticker scale too small");
  int x0 = static_cast<int>(std::lround(spec.cx * w - side / 2.0));
  int y0 = static_cast<int>(std::lround(spec.cy * h - side / 2.0));
  if (x0 < 0 || y0 < 0 || x0 + side > w || y0 + side > h)
    throw InvalidSpecError("sticker footprint exits the canvas");

  Image scaled = resize(rotated, side, side);
  Image out(h, w, 3);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y0 + y, x0 + x, c) = scaled.at(y, x, c);
  return out;
}

Image render_sticker(const StickerSpec& spec, const StickerConfig& cfg, int h,
                     int w, std::uint64_t seed) {
  if (spec.rotation_class < 0 || spec.rotation_class > 3)
    throw InvalidSpecError("rotation_class must be in {0,1,2,3}");
  return place_canvas(textured_glyph_canvas(spec, cfg, seed), spec, h, w);
}

std::vector<std::uint8_t> compute_mask(const Image& sticker) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(sticker.height) * sticker.width, 0);
  for (int y = 0; y < sticker.height; ++y)
    for (int x = 0; x < sticker.width; ++x)
      for (int c = 0; c < sticker.channels; ++c)
        if (sticker.at(y, x, c) != 0.0) {
          mask[static_cast<std::size_t>(y) * sticker.width + x] = 1;
          break;
        }
  return mask;
}

Image apply_intervention(const Image& x, const Image& sticker, double lambda) {
  if (!x.same_shape(sticker))
    throw InvalidSpecError("apply_intervention: shape mismatch");
  if (lambda < 0.0 || lambda > 1.0)
    throw InvalidSpecError("mixup lambda must be in [0,1]");
  std::vector<std::uint8_t> mask = compute_mask(sticker);
  Image out = x;  // off-mask pixels stay bit-identical
  for (int y = 0; y < x.height; ++y)
    for (int px = 0; px < x.width; ++px) {
      if (!mask[static_cast<std::size_t>(y) * x.width + px]) continue;
      for (int c = 0; c < x.channels; ++c) {
        double v =
            lambda * x.at(y, px, c) + (1.0 - lambda) * sticker.at(y, px, c);
        out.at(y, px, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  return out;
}

int assign_location_label(const StickerSpec& spec) {
  return 2 * (spec.cy >= 0.5 ? 1 : 0) + (spec.cx >= 0.5 ? 1 : 0);
}

int assign_rotation_label(const StickerSpec& spec) {
  return spec.rotation_class;
}

int assign_class_label(const StickerSpec& spec) { return spec.glyph_index; }

int assign_label(const StickerSpec& spec, StickerTask task) {
  switch (task) {
    case StickerTask::Location: return assign_location_label(spec);
    case StickerTask::Rotation: return assign_rotation_label(spec);
    default: return assign_class_label(spec);
  }
}

StickerSpec sample_spec(const StickerConfig& cfg, Rng& rng) {
  std::uniform_int_distribution<int> glyph(0, cfg.n_glyphs - 1);
  std::uniform_int_distribution<int> texture(0, cfg.n_textures - 1);
  std::uniform_int_distribution<int> rot(0, 3);
  std::uniform_real_distribution<double> scale(cfg.scale_min, cfg.scale_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  StickerSpec spec;
  spec.glyph_index = glyph(rng);
  spec.texture_index = texture(rng);
  spec.rotation_class = rot(rng);
  spec.scale = scale(rng);
  // Each glyph class keeps a canonical signature hue: a sticker class is
  // one recognizable sticker, varied only by texture/scale/placement/
  // rotation and a little brightness jitter. Hues divide the wheel evenly
  // from 0 so they line up with hue palettes a goal-pretrained backbone
  // already separates, which is what makes the task score well on TSM.
  double hue = static_cast<double>(spec.glyph_index) / cfg.n_glyphs;
  hsv_to_rgb(hue, 0.9, 0.75 + 0.25 * unit(rng), spec.color);
  // Center sampled so the sticker box stays fully inside the image
  // (+1px margin against rounding).
  double half = spec.scale / 2.0 + 0.04;
  std::uniform_real_distribution<double> pos(half, 1.0 - half);
  spec.cx = pos(rng);
  spec.cy = pos(rng);
  return spec;
}

Dataset build_sticker_dataset(const Dataset& ds, StickerTask task,
                              const StickerConfig& cfg, std::uint64_t seed,
                              double lambda,
                              std::vector<StickerSpec>* specs_out) {
  if (ds.empty()) throw DatasetFormatError("build_sticker_dataset: empty input");
  Dataset out;
  out.goal_classes = ds.goal_classes;
  out.subsidiary_classes = cfg.n_glyphs;
  out.domain_tag = ds.domain_tag + "-stickered";
  if (specs_out) specs_out->clear();

  Rng rng = make_rng(seed, "sticker-dataset");
  for (const Sample& s : ds.samples) {
    StickerSpec spec = sample_spec(cfg, rng);
    std::uint64_t render_seed = derive_seed(seed, "render:" + s.id);
    Image sticker =
        render_sticker(spec, cfg, s.image.height, s.image.width, render_seed);
    Sample o;
    o.id = s.id + "#sticker";
    o.image = apply_intervention(s.image, sticker, lambda);
    o.goal_label = s.goal_label;
    o.subsidiary_label = assign_label(spec, task);
    o.is_stickered = true;
    out.samples.push_back(std::move(o));
    if (specs_out) specs_out->push_back(spec);
  }
  out.validate();
  return out;
}

void write_sticker_manifest(const Dataset& ds,
                            const std::vector<StickerSpec>& specs,
                            StickerTask task, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetFormatError("cannot write manifest: " + path);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    nlohmann::json rec{
        {"id", s.id},
        {"task", sticker_task_name(task)},
        {"subsidiary_label", s.subsidiary_label.value_or(-1)},
    };
    if (i < specs.size()) {
      const StickerSpec& sp = specs[i];
      rec["spec"] = {{"glyph_index", sp.glyph_index},
                     {"texture_index", sp.texture_index},
                     {"color", {sp.color[0], sp.color[1], sp.color[2]}},
                     {"scale", sp.scale},
                     {"center", {sp.cx, sp.cy}},
                     {"rotation_class", sp.rotation_class}};
    }
    out << rec.dump() << "\n";
  }
}

}  // namespace sfda
