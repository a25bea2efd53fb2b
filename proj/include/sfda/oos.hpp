#pragma once

#include <cstdint>

#include "sfda/dataset.hpp"
#include "sfda/sticker.hpp"

namespace sfda {

/// Partition into grid x grid equal patches and rearrange them by a seeded
/// uniform permutation. Non-divisible sizes are resized to the nearest
/// multiple of `grid`, shuffled, then resized back.
Image shuffle_patches(const Image& img, int grid, std::uint64_t seed);

/// One patch-shuffled copy per source sample, each independently stickered
/// with probability `sticker_prob`; every output carries is_oos = true and
/// subsidiary_label = |C_n| (the reserved OOS index).
Dataset build_pseudo_oos_dataset(const Dataset& ds, int grid,
                                 double sticker_prob,
                                 const StickerConfig& sticker_cfg,
                                 double lambda, std::uint64_t seed);

}  // namespace sfda
