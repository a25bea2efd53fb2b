#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfda/dataset.hpp"

namespace sfda {

enum class StickerTask { Location, Rotation, Classification };

StickerTask parse_sticker_task(const std::string& name);
std::string sticker_task_name(StickerTask task);

/// Everything that determines one sticker intervention.
struct StickerSpec {
  int glyph_index = 0;     // index into the active glyph subset, < n_glyphs
  int texture_index = 0;   // procedural texture fill
  double color[3] = {1.0, 1.0, 1.0};
  double scale = 0.25;     // sticker side / min(H, W)
  double cx = 0.5;         // normalized center, x rightward
  double cy = 0.5;         // normalized center, y downward
  int rotation_class = 0;  // k * 90 degrees
};

struct StickerConfig {
  int n_glyphs = 10;            // |C_n|
  std::uint64_t glyph_seed = 0; // selects which alphabet subset is active
  double scale_min = 0.1;
  double scale_max = 0.4;
  int n_textures = 4;
};

/// The active alphabet subset: a seeded draw of `n_glyphs` letters out of 26.
std::vector<char> select_glyphs(const StickerConfig& cfg);

constexpr int kGlyphCanvas = 64;

/// Textured, colored glyph on a black kGlyphCanvas^2 canvas, unrotated.
Image textured_glyph_canvas(const StickerSpec& spec, const StickerConfig& cfg,
                            std::uint64_t seed);

/// Rotate `canvas` by spec.rotation_class * 90 deg, resize to the sticker
/// footprint box and paste at spec center on a zero H x W image.
Image place_canvas(const Image& canvas, const StickerSpec& spec, int h, int w);

/// Full render: black canvas with the rotated, scaled, textured glyph.
/// Throws InvalidSpecError when the sticker box exits the image.
Image render_sticker(const StickerSpec& spec, const StickerConfig& cfg, int h,
                     int w, std::uint64_t seed);

/// m(u) = 1(any channel of x_n nonzero), one value per pixel.
std::vector<std::uint8_t> compute_mask(const Image& sticker);

/// Masked mixup: m ⊙ (λx + (1−λ)x_n) + (1−m) ⊙ x, clamped to [0,1].
/// Pixels off the sticker footprint are returned bit-identical to x.
Image apply_intervention(const Image& x, const Image& sticker, double lambda);

/// Quadrant of the sticker center: 2*[cy >= 0.5] + [cx >= 0.5].
int assign_location_label(const StickerSpec& spec);
int assign_rotation_label(const StickerSpec& spec);
int assign_class_label(const StickerSpec& spec);
int assign_label(const StickerSpec& spec, StickerTask task);

/// Draw a random valid spec (uniform glyph/texture/rotation, uniform scale
/// in range, center uniform over positions that keep the sticker inside).
StickerSpec sample_spec(const StickerConfig& cfg, Rng& rng);

/// One stickered copy per input sample; subsidiary label per `task`, goal
/// labels carried over, fully determined by seed. When `specs_out` is given
/// it receives the spec used for each output sample, in order.
Dataset build_sticker_dataset(const Dataset& ds, StickerTask task,
                              const StickerConfig& cfg, std::uint64_t seed,
                              double lambda,
                              std::vector<StickerSpec>* specs_out = nullptr);

/// Sidecar audit manifest (one JSON record per sample) next to an exported
/// stickered dataset.
void write_sticker_manifest(const Dataset& ds,
                            const std::vector<StickerSpec>& specs,
                            StickerTask task, const std::string& path);

}  // namespace sfda
