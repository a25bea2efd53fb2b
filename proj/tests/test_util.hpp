#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cstdint>

#include "sfda/dataio.hpp"
#include "sfda/model.hpp"

namespace sfda_test {

/// Smallest architecture build_model accepts; ~250 parameters, used by the
/// finite-difference gradient checks.
inline sfda::ArchConfig tiny_arch() {
  sfda::ArchConfig a;
  a.image_size = 8;
  a.width1 = 2;
  a.width2 = 2;
  a.width3 = 2;
  a.feature_dim = 3;
  a.goal_hidden = 4;
  a.subsid_hidden = 4;
  return a;
}

/// Small-but-real architecture for trainer behavior tests.
inline sfda::ArchConfig small_arch() {
  sfda::ArchConfig a;
  a.image_size = 32;
  a.width1 = 4;
  a.width2 = 8;
  a.width3 = 8;
  a.feature_dim = 16;
  a.goal_hidden = 16;
  a.subsid_hidden = 16;
  return a;
}

inline std::pair<sfda::Dataset, sfda::Dataset> small_pair(
    std::uint64_t seed = 7, int n_per_class = 5, double magnitude = 0.6) {
  return sfda::make_synthetic_domain_pair(4, n_per_class,
                                          {"color", magnitude}, seed, 32);
}

inline long param_count(sfda::ModelBundle& m) {
  long n = 0;
  for (sfda::nn::Param* p : m.all_params()) n += p->w.size();
  return n;
}

}  // namespace sfda_test
