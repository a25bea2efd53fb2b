#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sfda/nn.hpp"

namespace sfda {

struct LossValueGrad {
  double value = 0.0;
  nn::Vec grad;  // w.r.t. the logits / feature passed in
};

/// Cross-entropy against the label-smoothed target distribution
/// (1 - s on the true class, s/(K-1) elsewhere). Gradient w.r.t. logits.
LossValueGrad ce_label_smoothed(const nn::Vec& logits, int label,
                                double smoothing);

/// Plain CE over the (|C_n|+1)-way softmax; the OOS node competes in the
/// denominator for every subsidiary label.
inline LossValueGrad ce(const nn::Vec& logits, int label) {
  return ce_label_smoothed(logits, label, 0.0);
}

/// L_div = D_KL(p_hat, uniform) - log K, computed literally in that form
/// (algebraically -H(p_hat)). Throws when p_hat is off-simplex by > 1e-4.
double loss_diversity(const nn::Vec& mean_softmax, int k);

/// Gradient of L_div w.r.t. each sample's goal logits, given the per-sample
/// softmax outputs whose mean is p_hat.
std::vector<nn::Vec> loss_diversity_grad(
    const std::vector<nn::Vec>& sample_softmax);

/// Row-normalized feature store over D_t ∪ D_{t,n}, one row per sample id.
class MemoryBank {
 public:
  MemoryBank(const std::vector<std::string>& ids, int dim, double temperature);

  int rows() const { return static_cast<int>(feats_.rows()); }
  int dim() const { return static_cast<int>(feats_.cols()); }
  double temperature() const { return temp_; }
  int row_of(const std::string& id) const;
  nn::Vec row(int r) const { return feats_.row(r); }

  /// Overwrite the named rows with L2-normalized copies of the features.
  void update(const nn::Mat& features, const std::vector<std::string>& ids);
  void update_row(const std::string& id, const nn::Vec& feature);

  bool initialized() const { return init_count_ == rows(); }
  int init_count() const { return init_count_; }

  /// p_j = exp(F_j . f / T) / sum_{j != self} exp(F_j . f / T); the entry
  /// at the self row is exactly 0.
  nn::Vec neighbor_probs(const nn::Vec& feature, int self_row) const;
  nn::Vec neighbor_probs(const nn::Vec& feature, const std::string& id) const {
    return neighbor_probs(feature, row_of(id));
  }

  const nn::Mat& features() const { return feats_; }
  nn::Mat& features_mutable() { return feats_; }

 private:
  nn::Mat feats_;  // N x d
  std::unordered_map<std::string, int> index_;
  std::vector<bool> written_;
  int init_count_ = 0;
  double temp_;
};

/// Per-sample neighborhood entropy -sum_j p_j log p_j averaged over the
/// batch; grads are w.r.t. the (normalized) batch features, bank rows
/// treated as constants.
struct SelfTrainingResult {
  double value = 0.0;
  std::vector<nn::Vec> feature_grads;
};
SelfTrainingResult loss_self_training(const MemoryBank& bank,
                                      const std::vector<nn::Vec>& features,
                                      const std::vector<std::string>& ids);

}  // namespace sfda
