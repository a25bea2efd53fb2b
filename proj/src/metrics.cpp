#include "sfda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "sfda/errors.hpp"
#include "sfda/losses.hpp"

namespace sfda {

ADistanceVariant parse_formula_variant(const std::string& name) {
  if (name == "standard") return ADistanceVariant::Standard;
  if (name == "paper_verbatim") return ADistanceVariant::PaperVerbatim;
  throw ConfigError("unknown formula variant: " + name);
}

namespace {

struct Standardizer {
  nn::Vec mean, inv_std;

  void fit(const nn::Mat& x) {
    mean = x.colwise().mean();
    nn::Vec var = (x.rowwise() - mean.transpose()).array().square().colwise().mean();
    inv_std = (var.array() + 1e-8).sqrt().inverse();
  }
  nn::Mat apply(const nn::Mat& x) const {
    return (x.rowwise() - mean.transpose()).array().rowwise() *
           inv_std.transpose().array();
  }
};

/// Multinomial logistic probe, full-batch Adam. Returns held-out accuracy.
/// Binary problems use k = 2.
double train_probe(const nn::Mat& x_train, const std::vector<int>& y_train,
                   const nn::Mat& x_test, const std::vector<int>& y_test,
                   int k, int iters = 300, double lr = 0.1) {
  const Eigen::Index d = x_train.cols();
  nn::Mat w = nn::Mat::Zero(d, k);
  nn::Vec b = nn::Vec::Zero(k);
  nn::Mat mw = w, vw = w;
  nn::Vec mb = b, vb = b;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double inv_n = 1.0 / static_cast<double>(x_train.rows());

  for (int t = 1; t <= iters; ++t) {
    nn::Mat logits = (x_train * w).rowwise() + b.transpose();
    nn::Mat p(logits.rows(), k);
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
      p.row(i) = nn::softmax(logits.row(i).transpose()).transpose();
    for (Eigen::Index i = 0; i < logits.rows(); ++i)
      p(i, y_train[static_cast<std::size_t>(i)]) -= 1.0;
    nn::Mat gw = x_train.transpose() * p * inv_n;
    nn::Vec gb = p.colwise().sum().transpose() * inv_n;

    double bc1 = 1.0 - std::pow(b1, t), bc2 = 1.0 - std::pow(b2, t);
    mw = b1 * mw + (1 - b1) * gw;
    vw = b2 * vw.array() + (1 - b2) * gw.array().square();
    w.array() -= lr * (mw.array() / bc1) / ((vw.array() / bc2).sqrt() + eps);
    mb = b1 * mb + (1 - b1) * gb;
    vb = b2 * vb.array() + (1 - b2) * gb.array().square();
    b.array() -= lr * (mb.array() / bc1) / ((vb.array() / bc2).sqrt() + eps);
  }

  int correct = 0;
  nn::Mat logits = (x_test * w).rowwise() + b.transpose();
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg;
    logits.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == y_test[static_cast<std::size_t>(i)])
      ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

/// 70/30 seeded split of (features, labels); returns held-out accuracy.
double split_and_probe_once(const nn::Mat& x, const std::vector<int>& y, int k,
                            std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, "probe-split");
  std::shuffle(order.begin(), order.end(), rng);

  Eigen::Index n_train = std::max<Eigen::Index>(1, (n * 7) / 10);
  Eigen::Index n_test = n - n_train;
  if (n_test < 1) throw ConfigError("probe: too few samples to split");

  nn::Mat xtr(n_train, x.cols()), xte(n_test, x.cols());
  std::vector<int> ytr, yte;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i < n_train) {
      xtr.row(i) = x.row(order[i]);
      ytr.push_back(y[order[i]]);
    } else {
      xte.row(i - n_train) = x.row(order[i]);
      yte.push_back(y[order[i]]);
    }
  }
  Standardizer std_;
  std_.fit(xtr);
  return train_probe(std_.apply(xtr), ytr, std_.apply(xte), yte, k);
}

/// Accuracy averaged over several independent seeded splits. The held-out
/// sets at desk scale are small (tens of samples), so a single split has
/// several points of quantization noise; averaging keeps probe-based scores
/// comparable at the margins the acceptance orderings use.
double split_and_probe(const nn::Mat& x, const std::vector<int>& y, int k,
                       std::uint64_t seed) {
  const int n_splits = 5;
  double sum = 0.0;
  for (int i = 0; i < n_splits; ++i)
    sum += split_and_probe_once(x, y, k,
                                derive_seed(seed, "split:" + std::to_string(i)));
  return sum / n_splits;
}

}  // namespace

ADistanceResult a_distance(const nn::Mat& features_a, const nn::Mat& features_b,
                           std::uint64_t seed, ADistanceVariant variant) {
  if (features_a.rows() < 20 || features_b.rows() < 20)
    throw ConfigError("a_distance: need at least 20 samples per side");

  ADistanceResult res;
  nn::Mat x(features_a.rows() + features_b.rows(), features_a.cols());
  x.topRows(features_a.rows()) = features_a;
  x.bottomRows(features_b.rows()) = features_b;
  std::vector<int> y(static_cast<std::size_t>(x.rows()), 0);
  std::fill(y.begin() + features_a.rows(), y.end(), 1);

  nn::Vec var =
      (x.rowwise() - x.colwise().mean()).array().square().colwise().mean();
  if (var.maxCoeff() < 1e-16) {
    res.degenerate = true;
    res.psi = 0.5;
  } else {
    res.psi = 1.0 - split_and_probe(x, y, 2, seed);
  }
  res.d_a = variant == ADistanceVariant::PaperVerbatim
                ? 2.0 * res.psi * (1.0 - res.psi)
                : std::max(0.0, 2.0 * (1.0 - 2.0 * res.psi));
  return res;
}

double linear_probe_accuracy(const nn::Mat& features,
                             const std::vector<int>& labels, int n_classes,
                             std::uint64_t seed) {
  if (n_classes < 2) throw ConfigError("probe needs at least 2 classes");
  return split_and_probe(features, labels, n_classes, seed);
}

nn::Mat extract_features(const ModelBundle& m, const Dataset& ds) {
  nn::Mat out(static_cast<Eigen::Index>(ds.size()), m.arch.feature_dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ModelBundle::Fwd f;
    out.row(static_cast<Eigen::Index>(i)) =
        m.forward_features(ds.samples[i].image, f).transpose();
  }
  return out;
}

FeatureFn frozen_feature_fn(const ModelBundle& m) {
  return [&m](const Image& img) {
    ModelBundle::Fwd f;
    return m.forward_features(img, f);
  };
}

namespace {
nn::Mat features_of(const Dataset& ds, const FeatureFn& fn) {
  if (ds.empty()) throw DatasetFormatError("feature extraction: empty dataset");
  nn::Vec first = fn(ds.samples[0].image);
  nn::Mat out(static_cast<Eigen::Index>(ds.size()), first.size());
  out.row(0) = first.transpose();
  for (std::size_t i = 1; i < ds.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = fn(ds.samples[i].image).transpose();
  return out;
}
}  // namespace

double dsm(const Dataset& ds, const Dataset& dsn, const FeatureFn& features,
           std::uint64_t seed, ADistanceVariant variant) {
  ADistanceResult res =
      a_distance(features_of(ds, features), features_of(dsn, features), seed,
                 variant);
  return std::clamp(1.0 - res.d_a / 2.0, 0.0, 1.0);
}

double tsm(const Dataset& dsn, const FeatureFn& features, std::uint64_t seed,
           int equalize_classes) {
  std::vector<int> labels;
  int max_label = -1;
  for (const Sample& s : dsn.samples) {
    if (!s.subsidiary_label)
      throw DatasetFormatError("tsm: sample without subsidiary label");
    labels.push_back(*s.subsidiary_label);
    max_label = std::max(max_label, *s.subsidiary_label);
  }
  int k = max_label + 1;
  if (k < 2) throw ConfigError("tsm: fewer than 2 subsidiary classes");

  Dataset filtered = dsn;
  if (equalize_classes >= 2 && k > equalize_classes) {
    // Seeded class subset, remapped to [0, equalize_classes).
    std::vector<int> classes(k);
    std::iota(classes.begin(), classes.end(), 0);
    Rng rng = make_rng(seed, "tsm-class-subset");
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(equalize_classes);
    std::vector<int> remap(k, -1);
    for (int i = 0; i < equalize_classes; ++i) remap[classes[i]] = i;
    filtered.samples.clear();
    labels.clear();
    for (const Sample& s : dsn.samples) {
      int r = remap[*s.subsidiary_label];
      if (r < 0) continue;
      filtered.samples.push_back(s);
      labels.push_back(r);
    }
    k = equalize_classes;
  }
  if (filtered.empty()) throw ConfigError("tsm: class subset left no samples");

  double acc = linear_probe_accuracy(features_of(filtered, features), labels,
                                     k, seed);
  return acc;  // 1 - heldout error
}

std::string SuitabilityReport::to_json() const {
  nlohmann::json j{{"task", task},
                   {"dsm", dsm},
                   {"tsm", tsm},
                   {"zeta_d", zeta_d},
                   {"zeta_n", zeta_n},
                   {"zeta", zeta},
                   {"passes", passes},
                   {"probe_error_psi", probe_error_psi},
                   {"formula_variant", formula_variant}};
  return j.dump(2);
}

SuitabilityReport suitability(const Dataset& ds, PretextTask task,
                              const ModelBundle& frozen_model,
                              const SuitabilityConfig& cfg) {
  Dataset intervened = build_pretext_dataset(ds, task, cfg.sticker, cfg.lambda,
                                             derive_seed(cfg.seed, "suit"));
  FeatureFn features = frozen_feature_fn(frozen_model);

  ADistanceResult ares =
      a_distance(features_of(ds, features), features_of(intervened, features),
                 derive_seed(cfg.seed, "suit-dsm"), cfg.variant);

  SuitabilityReport rep;
  rep.task = pretext_task_name(task);
  rep.dsm = std::clamp(1.0 - ares.d_a / 2.0, 0.0, 1.0);
  rep.tsm = tsm(intervened, features, derive_seed(cfg.seed, "suit-tsm"),
                cfg.equalize_classes);
  rep.zeta_d = cfg.zeta_d;
  rep.zeta_n = cfg.zeta_n;
  rep.zeta = cfg.zeta;
  rep.passes = rep.dsm + rep.tsm > rep.zeta;
  rep.probe_error_psi = ares.psi;
  rep.formula_variant =
      cfg.variant == ADistanceVariant::PaperVerbatim ? "paper_verbatim"
                                                     : "standard";
  return rep;
}

double accuracy(const ModelBundle& m, const Dataset& ds,
                const std::string& head) {
  if (ds.empty()) throw DatasetFormatError("accuracy: empty dataset");
  int correct = 0, total = 0;
  for (const Sample& s : ds.samples) {
    int label;
    nn::Vec logits;
    ModelBundle::Fwd f;
    if (head == "goal") {
      if (!s.goal_label)
        throw DatasetFormatError("accuracy: unlabeled sample " + s.id);
      label = *s.goal_label;
      logits = m.forward_goal(s.image, f);
    } else if (head == "subsidiary") {
      if (!s.subsidiary_label)
        throw DatasetFormatError("accuracy: sample without subsidiary label " +
                                 s.id);
      label = *s.subsidiary_label;
      logits = m.forward_subsidiary(s.image, f);
    } else {
      throw ConfigError("accuracy: head must be 'goal' or 'subsidiary'");
    }
    Eigen::Index arg;
    logits.maxCoeff(&arg);
    correct += static_cast<int>(arg) == label;
    ++total;
  }
  return static_cast<double>(correct) / total;
}

namespace {
nn::Mat goal_logit_features(const ModelBundle& m, const Dataset& ds) {
  nn::Mat out(static_cast<Eigen::Index>(ds.size()), m.goal_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ModelBundle::Fwd f;
    out.row(static_cast<Eigen::Index>(i)) =
        m.forward_goal(ds.samples[i].image, f).transpose();
  }
  return out;
}
}  // namespace

ADistancePair feature_a_distance_report(const ModelBundle& m_before,
                                        const ModelBundle& m_after,
                                        const Dataset& ds, const Dataset& dt,
                                        std::uint64_t seed) {
  // Measured in the goal classifier's output space: that is the space the
  // adaptation losses cluster, and with f_g frozen the coordinates mean the
  // same thing before and after. Backbone-feature distance keeps
  // adaptation-irrelevant nuisance (e.g. overall chroma statistics) fully
  // separable, so it cannot register the alignment the method performs.
  ADistancePair pair;
  pair.before = a_distance(goal_logit_features(m_before, ds),
                           goal_logit_features(m_before, dt),
                           derive_seed(seed, "adist-before"));
  pair.after = a_distance(goal_logit_features(m_after, ds),
                          goal_logit_features(m_after, dt),
                          derive_seed(seed, "adist-after"));
  return pair;
}

}  // namespace sfda
