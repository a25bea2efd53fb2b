#include "sfda/oos.hpp"

#include <algorithm>
#include <numeric>

#include "sfda/errors.hpp"

namespace sfda {

Image shuffle_patches(const Image& img, int grid, std::uint64_t seed) {
  if (grid < 2) throw ConfigError("patch grid must be >= 2");
  if (grid > std::min(img.height, img.width))
    throw ConfigError("patch grid exceeds image size");

  // Work at the nearest multiple of the grid so all patches are equal.
  int work_h = ((img.height + grid / 2) / grid) * grid;
  int work_w = ((img.width + grid / 2) / grid) * grid;
  work_h = std::max(work_h, grid);
  work_w = std::max(work_w, grid);
  Image work = resize(img, work_h, work_w);

  int ph = work_h / grid, pw = work_w / grid;
  std::vector<int> perm(grid * grid);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed, "patch-shuffle");
  std::shuffle(perm.begin(), perm.end(), rng);

  Image shuffled(work_h, work_w, work.channels);
  for (int p = 0; p < grid * grid; ++p) {
    int sy = (perm[p] / grid) * ph, sx = (perm[p] % grid) * pw;
    int dy = (p / grid) * ph, dx = (p % grid) * pw;
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        for (int c = 0; c < work.channels; ++c)
          shuffled.at(dy + y, dx + x, c) = work.at(sy + y, sx + x, c);
  }
  return resize(shuffled, img.height, img.width);
}

Dataset build_pseudo_oos_dataset(const Dataset& ds, int grid,
                                 double sticker_prob,
                                 const StickerConfig& sticker_cfg,
                                 double lambda, std::uint64_t seed) {
  if (sticker_prob < 0.0 || sticker_prob > 1.0)
    throw ConfigError("sticker_prob must be in [0,1]");
  Dataset out;
  out.goal_classes = ds.goal_classes;
  out.subsidiary_classes = sticker_cfg.n_glyphs;
  out.domain_tag = ds.domain_tag + "-oos";

  Rng rng = make_rng(seed, "oos-dataset");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const Sample& s : ds.samples) {
    // One independent permutation per image.
    std::uint64_t img_seed = derive_seed(seed, "oos-shuffle:" + s.id);
    Sample o;
    o.id = s.id + "#oos";
    o.image = shuffle_patches(s.image, grid, img_seed);
    if (coin(rng) < sticker_prob) {
      StickerSpec spec = sample_spec(sticker_cfg, rng);
      Image sticker =
          render_sticker(spec, sticker_cfg, o.image.height, o.image.width,
                         derive_seed(seed, "oos-render:" + s.id));
      o.image = apply_intervention(o.image, sticker, lambda);
      o.is_stickered = true;
    }
    o.is_oos = true;
    o.subsidiary_label = sticker_cfg.n_glyphs;  // the reserved OOS index
    out.samples.push_back(std::move(o));
  }
  out.validate();
  return out;
}

}  // namespace sfda
