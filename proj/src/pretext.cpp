#include "sfda/pretext.hpp"

#include <array>

#include "sfda/errors.hpp"
#include "sfda/oos.hpp"

namespace sfda {

PretextTask parse_pretext_task(const std::string& name) {
  if (name == "sticker-loc") return PretextTask::StickerLocation;
  if (name == "sticker-rot") return PretextTask::StickerRotation;
  if (name == "sticker-clsf") return PretextTask::StickerClassification;
  if (name == "image-rotation") return PretextTask::ImageRotation;
  if (name == "patch-location") return PretextTask::PatchLocation;
  if (name == "jigsaw") return PretextTask::Jigsaw;
  throw ConfigError("unknown pretext task: " + name);
}

std::string pretext_task_name(PretextTask task) {
  switch (task) {
    case PretextTask::StickerLocation: return "sticker-loc";
    case PretextTask::StickerRotation: return "sticker-rot";
    case PretextTask::StickerClassification: return "sticker-clsf";
    case PretextTask::ImageRotation: return "image-rotation";
    case PretextTask::PatchLocation: return "patch-location";
    default: return "jigsaw";
  }
}

namespace {

Image quadrant_crop(const Image& img, int quadrant) {
  int hh = img.height / 2, hw = img.width / 2;
  int y0 = (quadrant / 2) * hh, x0 = (quadrant % 2) * hw;
  Image crop(hh, hw, img.channels);
  for (int y = 0; y < hh; ++y)
    for (int x = 0; x < hw; ++x)
      for (int c = 0; c < img.channels; ++c)
        crop.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return resize(crop, img.height, img.width);
}

// Four fixed 2x2 jigsaw permutations (patch p of the output takes input
// patch perm[p]); identity excluded so every class alters the image.
constexpr std::array<std::array<int, 4>, 4> kJigsawPerms{{
    {1, 0, 3, 2},
    {2, 3, 0, 1},
    {3, 2, 1, 0},
    {1, 3, 0, 2},
}};

Image jigsaw_2x2(const Image& img, int perm_index) {
  int even_h = img.height - img.height % 2, even_w = img.width - img.width % 2;
  Image work = resize(img, even_h, even_w);
  int ph = even_h / 2, pw = even_w / 2;
  Image out(even_h, even_w, img.channels);
  const auto& perm = kJigsawPerms[perm_index];
  for (int p = 0; p < 4; ++p) {
    int sy = (perm[p] / 2) * ph, sx = (perm[p] % 2) * pw;
    int dy = (p / 2) * ph, dx = (p % 2) * pw;
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x)
        for (int c = 0; c < img.channels; ++c)
          out.at(dy + y, dx + x, c) = work.at(sy + y, sx + x, c);
  }
  return resize(out, img.height, img.width);
}

}  // namespace

Dataset build_pretext_dataset(const Dataset& ds, PretextTask task,
                              const StickerConfig& sticker_cfg, double lambda,
                              std::uint64_t seed) {
  switch (task) {
    case PretextTask::StickerLocation:
      return build_sticker_dataset(ds, StickerTask::Location, sticker_cfg,
                                   seed, lambda);
    case PretextTask::StickerRotation:
      return build_sticker_dataset(ds, StickerTask::Rotation, sticker_cfg,
                                   seed, lambda);
    case PretextTask::StickerClassification:
      return build_sticker_dataset(ds, StickerTask::Classification,
                                   sticker_cfg, seed, lambda);
    default:
      break;
  }

  Dataset out;
  out.goal_classes = ds.goal_classes;
  out.subsidiary_classes = 4;
  out.domain_tag = ds.domain_tag + "-" + pretext_task_name(task);
  Rng rng = make_rng(seed, "pretext:" + pretext_task_name(task));
  std::uniform_int_distribution<int> four(0, 3);
  for (const Sample& s : ds.samples) {
    int label = four(rng);
    Sample o;
    o.id = s.id + "#" + pretext_task_name(task);
    if (task == PretextTask::ImageRotation)
      o.image = rotate90(s.image, label);
    else if (task == PretextTask::PatchLocation)
      o.image = quadrant_crop(s.image, label);
    else
      o.image = jigsaw_2x2(s.image, label);
    o.goal_label = s.goal_label;
    o.subsidiary_label = label;
    out.samples.push_back(std::move(o));
  }
  out.validate();
  return out;
}

}  // namespace sfda
