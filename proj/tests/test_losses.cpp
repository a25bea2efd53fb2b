#include <cmath>

#include "doctest.h"
#include "sfda/errors.hpp"
#include "sfda/losses.hpp"
#include "sfda/rng.hpp"

using namespace sfda;

namespace {

nn::Vec random_simplex(int k, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  nn::Vec p(k);
  for (int i = 0; i < k; ++i) p[i] = u(rng);
  return p / p.sum();
}

double entropy(const nn::Vec& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0) h -= p[i] * std::log(p[i]);
  return h;
}

}  // namespace

TEST_CASE("cross entropy hand values") {
  // Equal logits, K = 2: loss = log 2 for any target distribution.
  nn::Vec logits = nn::Vec::Zero(2);
  CHECK(ce_label_smoothed(logits, 0, 0.1).value ==
        doctest::Approx(std::log(2.0)).epsilon(1e-10));
  // Equal logits, K classes: log K.
  for (int k : {3, 4, 10})
    CHECK(ce(nn::Vec::Zero(k), k - 1).value ==
          doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-10));
  // A dominating correct logit drives unsmoothed CE to ~0.
  nn::Vec sharp = nn::Vec::Zero(4);
  sharp[2] = 30.0;
  CHECK(ce(sharp, 2).value == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("cross entropy gradient sums to zero and matches finite diff") {
  Rng rng = make_rng(3, "ce-grad");
  std::normal_distribution<double> g(0.0, 1.0);
  nn::Vec logits(5);
  for (int i = 0; i < 5; ++i) logits[i] = g(rng);

  LossValueGrad lv = ce_label_smoothed(logits, 2, 0.1);
  CHECK(lv.grad.sum() == doctest::Approx(0.0).epsilon(1e-12));
  const double eps = 1e-5;
  for (int i = 0; i < 5; ++i) {
    nn::Vec up = logits, dn = logits;
    up[i] += eps;
    dn[i] -= eps;
    double fd = (ce_label_smoothed(up, 2, 0.1).value -
                 ce_label_smoothed(dn, 2, 0.1).value) /
                (2 * eps);
    CHECK(lv.grad[i] == doctest::Approx(fd).epsilon(1e-6));
  }
  CHECK_THROWS_AS(ce(logits, 5), ConfigError);
  CHECK_THROWS_AS(ce_label_smoothed(logits, 0, 1.0), ConfigError);
}

TEST_CASE("diversity loss equals negative entropy through both routes") {
  Rng rng = make_rng(9, "div");
  for (int trial = 0; trial < 100; ++trial) {
    int k = 2 + trial % 7;
    nn::Vec p = random_simplex(k, rng);
    CHECK(loss_diversity(p, k) ==
          doctest::Approx(-entropy(p)).epsilon(1e-8));
  }
  // Uniform mean-softmax is the minimizer: value -log K.
  CHECK(loss_diversity(nn::Vec::Constant(4, 0.25), 4) ==
        doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  nn::Vec off = nn::Vec::Constant(4, 0.3);
  CHECK_THROWS_AS(loss_diversity(off, 4), NumericError);
}

TEST_CASE("diversity gradient matches finite differences through softmax") {
  Rng rng = make_rng(11, "div-grad");
  std::normal_distribution<double> g(0.0, 1.0);
  const int b = 3, k = 4;
  std::vector<nn::Vec> logits(b);
  for (auto& l : logits) {
    l.resize(k);
    for (int i = 0; i < k; ++i) l[i] = g(rng);
  }
  auto eval = [&](const std::vector<nn::Vec>& ls) {
    nn::Vec p_hat = nn::Vec::Zero(k);
    for (const nn::Vec& l : ls) p_hat += nn::softmax(l);
    p_hat /= b;
    return loss_diversity(p_hat, k);
  };
  std::vector<nn::Vec> probs;
  for (const nn::Vec& l : logits) probs.push_back(nn::softmax(l));
  std::vector<nn::Vec> grads = loss_diversity_grad(probs);
  REQUIRE(grads.size() == static_cast<std::size_t>(b));

  const double eps = 1e-6;
  for (int s = 0; s < b; ++s)
    for (int i = 0; i < k; ++i) {
      auto up = logits, dn = logits;
      up[s][i] += eps;
      dn[s][i] -= eps;
      double fd = (eval(up) - eval(dn)) / (2 * eps);
      CHECK(grads[s][i] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("memory bank rows, lookup, and normalization") {
  MemoryBank bank({"a", "b", "c"}, 4, 0.05);
  CHECK(bank.rows() == 3);
  CHECK(bank.dim() == 4);
  CHECK_FALSE(bank.initialized());
  CHECK(bank.row_of("b") == 1);
  CHECK_THROWS_AS(bank.row_of("zz"), ConfigError);

  nn::Vec v(4);
  v << 3.0, 0.0, 4.0, 0.0;
  bank.update_row("a", v);
  CHECK(bank.row(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bank.row(0)[0] == doctest::Approx(0.6).epsilon(1e-12));
  bank.update_row("b", nn::Vec::Ones(4));
  bank.update_row("c", nn::Vec::Unit(4, 1));
  CHECK(bank.initialized());
}

TEST_CASE("neighbor distributions are row-stochastic with zero self mass") {
  Rng rng = make_rng(21, "bank");
  std::normal_distribution<double> g(0.0, 1.0);
  for (int n : {2, 5, 20, 100}) {
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("s" + std::to_string(i));
    MemoryBank bank(ids, 8, 0.05);
    for (int i = 0; i < n; ++i) {
      nn::Vec v(8);
      for (int d = 0; d < 8; ++d) v[d] = g(rng);
      bank.update_row(ids[i], v);
    }
    nn::Vec p = bank.neighbor_probs(bank.row(0), 0);
    REQUIRE(p.size() == n);
    CHECK(p[0] == 0.0);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-10));
    for (int i = 0; i < n; ++i) CHECK(p[i] >= 0.0);
  }
}

TEST_CASE("self-training hand values: 2-row and 3-orthonormal banks") {
  // Two rows: the only neighbor gets probability 1, entropy 0.
  {
    MemoryBank bank({"a", "b"}, 3, 0.05);
    bank.update_row("a", nn::Vec::Unit(3, 0));
    bank.update_row("b", nn::Vec::Unit(3, 1));
    auto res = loss_self_training(
        bank, {bank.row(0), bank.row(1)}, {"a", "b"});
    CHECK(res.value == doctest::Approx(0.0).epsilon(1e-6));
  }
  // Three orthonormal rows: both neighbors score 0, p = (1/2, 1/2),
  // entropy log 2 per sample.
  {
    MemoryBank bank({"a", "b", "c"}, 3, 0.05);
    for (int i = 0; i < 3; ++i)
      bank.update_row(std::string(1, 'a' + i), nn::Vec::Unit(3, i));
    auto res = loss_self_training(bank, {bank.row(0)}, {"a"});
    CHECK(res.value == doctest::Approx(std::log(2.0)).epsilon(1e-6));
  }
}

TEST_CASE("self-training ignores the stale self row entirely") {
  Rng rng = make_rng(33, "self-excl");
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::string> ids{"a", "b", "c", "d"};
  MemoryBank bank(ids, 6, 0.05);
  for (const auto& id : ids) {
    nn::Vec v(6);
    for (int d = 0; d < 6; ++d) v[d] = g(rng);
    bank.update_row(id, v);
  }
  nn::Vec query = bank.row(0);
  double base = loss_self_training(bank, {query}, {"a"}).value;
  bank.update_row("a", nn::Vec::Ones(6) * 5.0);  // perturb only the self row
  double perturbed = loss_self_training(bank, {query}, {"a"}).value;
  CHECK(base == doctest::Approx(perturbed).epsilon(1e-12));
}

TEST_CASE("self-training gradients match finite differences") {
  Rng rng = make_rng(55, "st-grad");
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  MemoryBank bank(ids, 5, 0.05);
  for (const auto& id : ids) {
    nn::Vec v(5);
    for (int d = 0; d < 5; ++d) v[d] = g(rng);
    bank.update_row(id, v);
  }
  std::vector<nn::Vec> feats{bank.row(0), bank.row(2)};
  std::vector<std::string> q_ids{"a", "c"};
  auto res = loss_self_training(bank, feats, q_ids);
  REQUIRE(res.feature_grads.size() == 2);

  const double eps = 1e-6;
  for (int s = 0; s < 2; ++s)
    for (int d = 0; d < 5; ++d) {
      auto up = feats, dn = feats;
      up[s][d] += eps;
      dn[s][d] -= eps;
      double fd = (loss_self_training(bank, up, q_ids).value -
                   loss_self_training(bank, dn, q_ids).value) /
                  (2 * eps);
      CHECK(res.feature_grads[s][d] == doctest::Approx(fd).epsilon(1e-5));
    }
}
