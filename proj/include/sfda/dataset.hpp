#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfda/image.hpp"
#include "sfda/rng.hpp"

namespace sfda {

struct Sample {
  std::string id;
  Image image;
  std::optional<int> goal_label;
  std::optional<int> subsidiary_label;
  bool is_oos = false;
  bool is_stickered = false;
};

struct Dataset {
  std::vector<Sample> samples;
  int goal_classes = 0;
  int subsidiary_classes = 0;
  std::string domain_tag;
  std::vector<std::string> warnings;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  /// Fails on duplicate ids, out-of-range labels, or violated OOS/sticker
  /// label contracts; records a warning for uncovered goal classes.
  void validate();
};

/// Concatenate two datasets that agree on class counts (used for the
/// D_s ∪ D_{s,n} and D_t ∪ D_{t,n} unions).
Dataset concat(const Dataset& a, const Dataset& b);

/// Deterministic seeded shuffle-and-chunk batch stream. Each epoch is a
/// fresh permutation of all sample indices; the final short batch is kept.
class BatchStream {
 public:
  BatchStream(const Dataset& ds, int batch_size, std::uint64_t seed);

  /// Indices of the next batch; starts a new epoch when the current one
  /// is exhausted.
  std::vector<int> next();

  int batches_per_epoch() const;
  int epoch() const { return epoch_; }

 private:
  const Dataset* ds_;
  int batch_size_;
  std::uint64_t seed_;
  std::vector<int> order_;
  std::size_t cursor_ = 0;
  int epoch_ = -1;

  void start_epoch();
};

}  // namespace sfda
