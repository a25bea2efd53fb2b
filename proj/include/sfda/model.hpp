#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfda/dataset.hpp"
#include "sfda/nn.hpp"

namespace sfda {

enum class Component { Backbone, GoalHead, SubsidiaryHead };

struct ArchConfig {
  int image_size = 32;
  int image_channels = 3;
  int width1 = 16, width2 = 32, width3 = 64;
  int feature_dim = 128;   // d
  int goal_hidden = 128;
  int subsid_hidden = 128;

  std::string fingerprint() const;  // identifies arch + class counts at save
};

/// Shared backbone h (three strided conv blocks + projection), goal head
/// f_g on the backbone feature z, and subsidiary head f_n on the
/// penultimate block's activation (the mid-level tap), emitting
/// sticker_classes + 1 logits including the OOS node.
struct ModelBundle {
  ArchConfig arch;
  int goal_classes = 0;
  int sticker_classes = 0;

  nn::Conv2d conv1, conv2, conv3;
  nn::Linear proj;
  nn::Linear goal1, goal2;
  nn::Linear sub1, sub2;

  /// Per-sample forward trace; required by every backward entry point.
  struct Fwd {
    nn::Conv2d::Cache c1, c2, c3;
    nn::ReluCache r1, r2, r3, rg, rn;
    nn::Tensor3 a1, a2, a3;  // post-relu block outputs; a2 is the tap
    nn::Vec pooled;
    nn::Linear::Cache projc, g1c, g2c, n1c, n2c;
    nn::Vec z;            // backbone feature, d-dim
    nn::Vec goal_logits;  // |C_g|
    nn::Vec sub_logits;   // |C_n| + 1
    int tap_h = 0, tap_w = 0;
  };

  /// Backbone feature z (fills the backbone part of the trace).
  nn::Vec forward_features(const Image& img, Fwd& f) const;
  /// Goal logits; runs the backbone first.
  nn::Vec forward_goal(const Image& img, Fwd& f) const;
  /// Subsidiary logits from the mid-level tap; runs blocks 1-2 if needed.
  nn::Vec forward_subsidiary(const Image& img, Fwd& f) const;
  /// Both heads in one pass.
  void forward_all(const Image& img, Fwd& f) const;

  /// Gradients flow into every parameter on the path regardless of freeze
  /// state; freezing is enforced at the optimizer.
  void backward_goal(const Fwd& f, const nn::Vec& dlogits);
  void backward_subsidiary(const Fwd& f, const nn::Vec& dlogits);
  void backward_from_feature(const Fwd& f, const nn::Vec& dz);

  std::vector<nn::Param*> params(Component c);
  std::vector<nn::Param*> all_params();
  void zero_grad();

  void set_frozen(Component c, bool frozen);
  bool is_frozen(Component c) const;
  std::uint64_t component_checksum(Component c) const;
};

ModelBundle build_model(const ArchConfig& arch, int goal_classes,
                        int sticker_classes, std::uint64_t seed);

/// Versioned binary checkpoint; loading verifies the config fingerprint
/// and returns the stored phase tag ("source_goal", "source_sticker",
/// "adapted").
void save_checkpoint(const ModelBundle& m, const std::string& phase_tag,
                     const std::string& path);
std::string load_checkpoint(ModelBundle& m, const std::string& path);
/// Phase tag without loading parameters.
std::string peek_checkpoint_phase(const std::string& path);

}  // namespace sfda
