#include "sfda/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "sfda/errors.hpp"

namespace sfda {

void Dataset::validate() {
  std::unordered_set<std::string> seen;
  std::vector<bool> covered(goal_classes > 0 ? goal_classes : 0, false);
  for (const Sample& s : samples) {
    if (!seen.insert(s.id).second)
      throw DatasetFormatError("duplicate sample id: " + s.id);
    if (s.goal_label) {
      if (*s.goal_label < 0 || *s.goal_label >= goal_classes)
        throw DatasetFormatError("goal label out of range for sample " + s.id);
      covered[*s.goal_label] = true;
    }
    if (s.subsidiary_label) {
      if (*s.subsidiary_label < 0 || *s.subsidiary_label > subsidiary_classes)
        throw DatasetFormatError("subsidiary label out of range for sample " +
                                 s.id);
    }
    if (s.is_oos &&
        (!s.subsidiary_label || *s.subsidiary_label != subsidiary_classes))
      throw DatasetFormatError("OOS sample " + s.id +
                               " must carry the OOS label index");
    if (s.is_stickered && !s.subsidiary_label)
      throw DatasetFormatError("stickered sample " + s.id +
                               " missing subsidiary label");
  }
  bool any_labeled =
      std::any_of(samples.begin(), samples.end(),
                  [](const Sample& s) { return s.goal_label.has_value(); });
  if (any_labeled) {
    for (int k = 0; k < static_cast<int>(covered.size()); ++k)
      if (!covered[k])
        warnings.push_back("goal class " + std::to_string(k) +
                           " has no samples");
  }
}

Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.goal_classes != b.goal_classes)
    throw DatasetFormatError("concat: goal class-count mismatch");
  // A zero subsidiary count means "no subsidiary labels here"; the unions
  // D_s ∪ D_{s,n} and D_t ∪ D_{t,n} mix one labeled and one unlabeled side.
  if (a.subsidiary_classes != 0 && b.subsidiary_classes != 0 &&
      a.subsidiary_classes != b.subsidiary_classes)
    throw DatasetFormatError("concat: subsidiary class-count mismatch");
  Dataset out = a;
  out.subsidiary_classes =
      std::max(a.subsidiary_classes, b.subsidiary_classes);
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  out.domain_tag = a.domain_tag + "+" + b.domain_tag;
  return out;
}

BatchStream::BatchStream(const Dataset& ds, int batch_size, std::uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  order_.resize(ds.size());
  std::iota(order_.begin(), order_.end(), 0);
  start_epoch();
}

void BatchStream::start_epoch() {
  ++epoch_;
  Rng rng = make_rng(seed_, "batch-epoch:" + std::to_string(epoch_));
  std::shuffle(order_.begin(), order_.end(), rng);
  cursor_ = 0;
}

int BatchStream::batches_per_epoch() const {
  return static_cast<int>((ds_->size() + batch_size_ - 1) / batch_size_);
}

std::vector<int> BatchStream::next() {
  if (cursor_ >= order_.size()) start_epoch();
  std::size_t end = std::min(cursor_ + batch_size_, order_.size());
  std::vector<int> batch(order_.begin() + cursor_, order_.begin() + end);
  cursor_ = end;
  return batch;
}

}  // namespace sfda
