#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sfda/dataset.hpp"
#include "sfda/logging.hpp"
#include "sfda/losses.hpp"
#include "sfda/model.hpp"
#include "sfda/oos.hpp"
#include "sfda/sticker.hpp"

namespace sfda {

struct TrainConfig {
  double lr = 1e-3;
  // Shared by every per-loss Adam. With the conventional 1e-8 the update is
  // nearly magnitude-blind (~lr per coordinate), which makes round-robin
  // optimizers on shared parameters fight with equal-size opposing steps;
  // raising eps toward 1.0 makes steps scale with the gradient again, so the
  // losses settle at a weighted compromise. Small models need the latter.
  double adam_eps = 1e-8;
  int batch_size = 64;
  int epochs_goal = 20;
  int epochs_sticker = 10;
  int epochs_adapt = 15;
  double lambda = 0.4;          // sticker mixup ratio
  StickerTask task = StickerTask::Classification;
  StickerConfig sticker;        // |C_n|, scale range, glyph subset
  int oos_grid = 6;
  double sticker_prob = 0.5;    // pseudo-OOS stickering rate
  double temperature = 0.05;    // memory bank T
  double smoothing = 0.1;       // label smoothing s
  std::uint64_t seed = 0;
  std::string bank_space = "backbone";  // or "goal_logits"
  // Ablation toggles (Table-style rows).
  bool use_subsidiary = true;   // L_{t,n}
  bool use_oos = true;          // L_s^{(od)} during sticker pretraining
  bool use_st = true;
  bool use_div = true;

  void validate() const;
};

/// Round-robin multi-loss driver: one optimizer per loss, exactly one
/// loss's gradients applied per micro-step.
class RoundRobin {
 public:
  struct Entry {
    std::string name;
    std::function<double()> compute;  // forward+backward, returns loss value
    nn::Adam* optimizer = nullptr;
  };

  void add(Entry e) { entries_.push_back(std::move(e)); }

  /// Run the named losses in order; unknown names throw ConfigError.
  /// Returns (name, value) per micro-step.
  std::vector<std::pair<std::string, double>> step(
      ModelBundle& m, const std::vector<std::string>& schedule);

 private:
  std::vector<Entry> entries_;
};

/// Phase 1 (Eq. 7 contract): h and f_g trained with label-smoothed CE over
/// D_s ∪ D_{s,n}; f_n untouched.
void pretrain_goal(ModelBundle& m, const Dataset& ds, const Dataset& dsn,
                   const TrainConfig& cfg, MetricsLog* log = nullptr);

/// Phase 2 (Eq. 8 contract): only f_n trained, h and f_g frozen; separate
/// optimizers for the stickered-source and pseudo-OOS terms, round-robin.
void pretrain_sticker(ModelBundle& m, const Dataset& dsn, const Dataset& dod,
                      const TrainConfig& cfg, MetricsLog* log = nullptr);

/// Build + initialize the joint bank over D_t ∪ D_{t,n} with one backbone
/// (or goal-logit) feature pass.
std::unique_ptr<MemoryBank> init_memory_bank(const ModelBundle& m,
                                             const Dataset& joint_target,
                                             const TrainConfig& cfg);

/// Phase 3 (Eq. 9 contract): f_g frozen; per step the micro-schedule is
/// subsidiary -> self-training -> diversity, each with its own optimizer;
/// L_{t,n} updates {h, f_n}, L_st and L_div update h only.
void adapt_target(ModelBundle& m, const Dataset& dt, const Dataset& dtn,
                  const TrainConfig& cfg, MetricsLog* log = nullptr);

}  // namespace sfda
