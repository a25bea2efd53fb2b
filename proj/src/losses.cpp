#include "sfda/losses.hpp"

#include <cmath>
#include <limits>

#include "sfda/errors.hpp"

namespace sfda {

LossValueGrad ce_label_smoothed(const nn::Vec& logits, int label,
                                double smoothing) {
  const int k = static_cast<int>(logits.size());
  if (label < 0 || label >= k)
    throw ConfigError("cross-entropy label out of range");
  if (smoothing < 0.0 || smoothing >= 1.0)
    throw ConfigError("smoothing must be in [0,1)");

  nn::Vec target = nn::Vec::Constant(k, k > 1 ? smoothing / (k - 1) : 0.0);
  target[label] = 1.0 - smoothing;

  // log-softmax for a stable -sum t_i log p_i
  double mx = logits.maxCoeff();
  double lse = mx + std::log((logits.array() - mx).exp().sum());
  nn::Vec logp = logits.array() - lse;

  LossValueGrad out;
  out.value = -target.dot(logp);
  out.grad = logp.array().exp().matrix() - target;
  return out;
}

double loss_diversity(const nn::Vec& mean_softmax, int k) {
  if (static_cast<int>(mean_softmax.size()) != k)
    throw ConfigError("loss_diversity: wrong vector length");
  if (mean_softmax.minCoeff() < -1e-12 ||
      std::fabs(mean_softmax.sum() - 1.0) > 1e-4)
    throw NumericError("loss_diversity: input is not a probability vector");

  // Literal form: D_KL(p_hat || uniform) - log K.
  double kl = 0.0;
  const double logk = std::log(static_cast<double>(k));
  for (int i = 0; i < k; ++i) {
    double p = mean_softmax[i];
    if (p > 0.0) kl += p * (std::log(p) + logk);
  }
  return kl - logk;
}

std::vector<nn::Vec> loss_diversity_grad(
    const std::vector<nn::Vec>& sample_softmax) {
  const int b = static_cast<int>(sample_softmax.size());
  if (b == 0) throw ConfigError("loss_diversity_grad: empty batch");
  const int k = static_cast<int>(sample_softmax[0].size());

  nn::Vec p_hat = nn::Vec::Zero(k);
  for (const nn::Vec& p : sample_softmax) p_hat += p;
  p_hat /= b;

  // dL/dp_hat_j = log p_hat_j + 1, then through each sample's softmax
  // jacobian and the 1/B mean.
  nn::Vec a(k);
  for (int j = 0; j < k; ++j)
    a[j] = std::log(std::max(p_hat[j], 1e-300)) + 1.0;

  std::vector<nn::Vec> grads;
  grads.reserve(b);
  for (const nn::Vec& p : sample_softmax) {
    double pa = p.dot(a);
    grads.push_back((p.cwiseProduct(a) - pa * p) / b);
  }
  return grads;
}

MemoryBank::MemoryBank(const std::vector<std::string>& ids, int dim,
                       double temperature)
    : feats_(nn::Mat::Zero(static_cast<Eigen::Index>(ids.size()), dim)),
      written_(ids.size(), false), temp_(temperature) {
  if (temperature <= 0.0) throw ConfigError("bank temperature must be > 0");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!index_.emplace(ids[i], static_cast<int>(i)).second)
      throw ConfigError("duplicate id in memory bank: " + ids[i]);
  }
}

int MemoryBank::row_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw ConfigError("unknown sample id in memory bank: " + id);
  return it->second;
}

void MemoryBank::update_row(const std::string& id, const nn::Vec& feature) {
  int r = row_of(id);
  double norm = feature.norm();
  if (norm < 1e-12) throw NumericError("cannot bank a near-zero feature");
  feats_.row(r) = feature.transpose() / norm;
  if (!written_[r]) {
    written_[r] = true;
    ++init_count_;
  }
}

void MemoryBank::update(const nn::Mat& features,
                        const std::vector<std::string>& ids) {
  if (features.rows() != static_cast<Eigen::Index>(ids.size()))
    throw ConfigError("bank update: row/id count mismatch");
  for (std::size_t i = 0; i < ids.size(); ++i)
    update_row(ids[i], features.row(static_cast<Eigen::Index>(i)));
}

nn::Vec MemoryBank::neighbor_probs(const nn::Vec& feature, int self_row) const {
  const int n = rows();
  if (self_row < 0 || self_row >= n)
    throw ConfigError("neighbor_probs: self row out of range");
  if (n < 2) throw ConfigError("neighbor_probs: bank has no neighbors");

  nn::Vec scores = feats_ * feature / temp_;
  scores[self_row] = -std::numeric_limits<double>::infinity();
  double mx = scores.maxCoeff();
  nn::Vec p(n);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    p[j] = j == self_row ? 0.0 : std::exp(scores[j] - mx);
    sum += p[j];
  }
  return p / sum;
}

SelfTrainingResult loss_self_training(const MemoryBank& bank,
                                      const std::vector<nn::Vec>& features,
                                      const std::vector<std::string>& ids) {
  if (features.size() != ids.size() || features.empty())
    throw ConfigError("loss_self_training: bad batch");

  SelfTrainingResult out;
  out.feature_grads.reserve(features.size());
  const double inv_b = 1.0 / static_cast<double>(features.size());
  const double inv_t = 1.0 / bank.temperature();

  for (std::size_t i = 0; i < features.size(); ++i) {
    int self = bank.row_of(ids[i]);
    nn::Vec p = bank.neighbor_probs(features[i], self);

    double entropy = 0.0;
    nn::Vec plogp = nn::Vec::Zero(p.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (p[j] > 0.0) {
        plogp[j] = p[j] * std::log(p[j]);
        entropy -= plogp[j];
      }
    }
    out.value += entropy * inv_b;

    // dL/ds_l = p_l (sum_j p_j log p_j) - p_l log p_l, s = F f / T.
    double s_plogp = plogp.sum();
    nn::Vec ds = p * s_plogp - plogp;
    out.feature_grads.push_back(inv_b * inv_t *
                                (bank.features().transpose() * ds));
  }
  return out;
}

}  // namespace sfda
