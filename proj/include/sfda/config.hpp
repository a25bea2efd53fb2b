#pragma once

#include <string>
#include <vector>

#include "sfda/dataio.hpp"
#include "sfda/metrics.hpp"
#include "sfda/trainer.hpp"

namespace sfda {

/// Resolved run configuration. Every field has a default; a JSON config
/// file and `key=value` dot-path overrides are layered on top. The schema
/// with the paper-default annotations is documented in the README.
struct RunConfig {
  // data
  int n_classes = 4;
  int n_per_class = 100;
  std::string shift = "color:0.6";
  int image_size = 32;

  TrainConfig train;

  // suitability
  double zeta_d = 0.5;
  double zeta_n = 0.6;
  double zeta = 1.1;
  std::string formula_variant = "standard";
  int equalize_classes = 4;

  static RunConfig load(const std::string& config_path,
                        const std::vector<std::string>& overrides);
  std::string to_json() const;
  void apply_override(const std::string& key, const std::string& value);
  void validate() const;
};

}  // namespace sfda
