#pragma once

#include <cstdint>
#include <string>

#include "sfda/dataset.hpp"
#include "sfda/sticker.hpp"

namespace sfda {

/// Candidate subsidiary tasks compared by the suitability criterion.
enum class PretextTask {
  StickerLocation,
  StickerRotation,
  StickerClassification,
  ImageRotation,   // whole-image k*90 deg rotation, label k
  PatchLocation,   // quadrant crop resized to full size, label = quadrant
  Jigsaw,          // full-image 2x2 patch permutation, label = perm index
};

PretextTask parse_pretext_task(const std::string& name);
std::string pretext_task_name(PretextTask task);

/// Intervened dataset with subsidiary labels for any candidate task;
/// all tasks here emit 4 label classes except sticker classification,
/// which emits |C_n| (equalized later by the TSM probe).
Dataset build_pretext_dataset(const Dataset& ds, PretextTask task,
                              const StickerConfig& sticker_cfg, double lambda,
                              std::uint64_t seed);

}  // namespace sfda
