#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "sfda/dataset.hpp"

namespace sfda {

/// Named deterministic corruption applied to target-domain images.
struct ShiftSpec {
  std::string name = "color";  // one of: color, noise, blur
  double magnitude = 0.5;      // 0 = no shift
};

ShiftSpec parse_shift_spec(const std::string& text);  // "color:0.5" form

/// Load `root/<class_name>/<image files>`; classes indexed by sorted
/// subdirectory name, images resized and scaled to [0,1].
Dataset load_image_folder(const std::string& root, int image_h, int image_w);

/// Render a desk-scale source/target pair: same per-sample content latents,
/// target corrupted by `shift`. Bit-identical for identical seeds;
/// magnitude 0 gives pixel-identical domains.
std::pair<Dataset, Dataset> make_synthetic_domain_pair(int n_classes,
                                                       int n_per_class,
                                                       const ShiftSpec& shift,
                                                       std::uint64_t seed,
                                                       int image_size = 32);

/// Apply the named corruption to one image (exposed for tests).
Image apply_shift(const Image& img, const ShiftSpec& shift, Rng& rng);

/// Write a dataset back out as `root/<class_name>/<id>.png` for inspection.
/// Unlabeled samples go under `root/_unlabeled/`.
void export_image_folder(const Dataset& ds, const std::string& root);

}  // namespace sfda
