#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "sfda/dataset.hpp"
#include "sfda/model.hpp"
#include "sfda/pretext.hpp"

namespace sfda {

enum class ADistanceVariant { Standard, PaperVerbatim };

ADistanceVariant parse_formula_variant(const std::string& name);

struct ADistanceResult {
  double psi = 0.5;       // held-out probe error
  double d_a = 0.0;
  bool degenerate = false;  // all features identical -> psi pinned at 0.5
};

/// Linear binary probe (logistic loss, 70/30 split) between two feature
/// populations; d_A = max(0, 2(1-2 psi)) for the standard variant,
/// 2 psi (1-psi) for the verbatim one.
ADistanceResult a_distance(const nn::Mat& features_a, const nn::Mat& features_b,
                           std::uint64_t seed,
                           ADistanceVariant variant = ADistanceVariant::Standard);

/// Multinomial linear probe accuracy on frozen features (70/30 split).
double linear_probe_accuracy(const nn::Mat& features,
                             const std::vector<int>& labels, int n_classes,
                             std::uint64_t seed);

using FeatureFn = std::function<nn::Vec(const Image&)>;

/// Backbone feature z for every sample, one row each.
nn::Mat extract_features(const ModelBundle& m, const Dataset& ds);
FeatureFn frozen_feature_fn(const ModelBundle& m);

/// gamma_DSM = 1 - d_A(D_s, D_{s,n}) / 2 on frozen features.
double dsm(const Dataset& ds, const Dataset& dsn, const FeatureFn& features,
           std::uint64_t seed,
           ADistanceVariant variant = ADistanceVariant::Standard);

/// gamma_TSM = 1 - linear-probe error of the subsidiary task on frozen
/// goal-pretrained features; class count equalized to `equalize_classes`
/// by a seeded class subset when the task has more.
double tsm(const Dataset& dsn, const FeatureFn& features, std::uint64_t seed,
           int equalize_classes = 4);

struct SuitabilityReport {
  std::string task;
  double dsm = 0.0;
  double tsm = 0.0;
  double zeta_d = 0.5;
  double zeta_n = 0.6;
  double zeta = 1.1;
  bool passes = false;  // dsm + tsm > zeta
  double probe_error_psi = 0.5;
  std::string formula_variant = "standard";

  std::string to_json() const;
};

struct SuitabilityConfig {
  StickerConfig sticker;
  double lambda = 0.4;
  std::uint64_t seed = 0;
  ADistanceVariant variant = ADistanceVariant::Standard;
  double zeta_d = 0.5, zeta_n = 0.6, zeta = 1.1;
  int equalize_classes = 4;
};

/// DSM + TSM against the thresholds for one candidate task, using the
/// supplied frozen goal-pretrained model for both metrics.
SuitabilityReport suitability(const Dataset& ds, PretextTask task,
                              const ModelBundle& frozen_model,
                              const SuitabilityConfig& cfg);

/// Fraction correct of the arg-max prediction of the named head.
double accuracy(const ModelBundle& m, const Dataset& ds,
                const std::string& head);

struct ADistancePair {
  ADistanceResult before;
  ADistanceResult after;
};

/// Source-target d_A in backbone feature space, before vs after adaptation.
ADistancePair feature_a_distance_report(const ModelBundle& m_before,
                                        const ModelBundle& m_after,
                                        const Dataset& ds, const Dataset& dt,
                                        std::uint64_t seed);

}  // namespace sfda
