#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "sfda/rng.hpp"

namespace sfda::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// One flat parameter block with its gradient accumulator.
struct Param {
  Vec w;
  Vec g;
  bool frozen = false;

  void init_zero(Eigen::Index n) {
    w = Vec::Zero(n);
    g = Vec::Zero(n);
  }
  void zero_grad() { g.setZero(); }
};

/// Gaussian fan-in init, deterministic per (seed, tag).
void init_normal(Param& p, double stddev, std::uint64_t seed,
                 const std::string& tag);

/// FNV-1a over the raw parameter bytes; drives the freeze-contract audits.
std::uint64_t checksum(const std::vector<const Param*>& params);

/// Channel-major feature map: index (c, y, x) -> c*h*w + y*w + x.
struct Tensor3 {
  int c = 0, h = 0, w = 0;
  Vec data;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_) {
    data = Vec::Zero(static_cast<Eigen::Index>(c_) * h_ * w_);
  }
  double& at(int ci, int y, int x) {
    return data[(static_cast<Eigen::Index>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    return data[(static_cast<Eigen::Index>(ci) * h + y) * w + x];
  }
};

// ---------------------------------------------------------------------------
// Layers. forward() fills a cache; backward() accumulates parameter
// gradients and returns the input gradient. One cache per sample in flight.

struct Conv2d {
  int in_c = 0, out_c = 0, kernel = 3, stride = 1, pad = 1;
  Param weight;  // out_c x (in_c * k * k), row-major rows
  Param bias;    // out_c

  struct Cache {
    Mat cols;  // (in_c*k*k) x (oh*ow)
    int in_h = 0, in_w = 0;
  };

  void init(int in_channels, int out_channels, int k, int stride_, int pad_,
            std::uint64_t seed, const std::string& tag);
  int out_h(int in_h) const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w(int in_w) const { return (in_w + 2 * pad - kernel) / stride + 1; }

  Tensor3 forward(const Tensor3& x, Cache& c) const;
  Tensor3 backward(const Tensor3& gout, const Cache& c);
};

struct Linear {
  Param weight;  // out x in, row-major rows
  Param bias;    // out
  int in_dim = 0, out_dim = 0;

  struct Cache {
    Vec input;
  };

  void init(int in, int out, std::uint64_t seed, const std::string& tag);
  Vec forward(const Vec& x, Cache& c) const;
  Vec backward(const Vec& gout, const Cache& c);
};

struct ReluCache {
  Vec mask;  // 1 where input > 0
};

Vec relu(const Vec& x, ReluCache& c);
Vec relu_backward(const Vec& gout, const ReluCache& c);
/// Leaky variant (backward shared with relu_backward via the stored mask);
/// used where the input is nonnegative and plain relu units can die
/// permanently.
Vec leaky_relu(const Vec& x, ReluCache& c, double slope = 0.01);
Tensor3 relu(const Tensor3& x, ReluCache& c);
Tensor3 relu_backward_t(const Tensor3& gout, const ReluCache& c, int ch, int h,
                        int w);

/// 2x2 average pool, stride 2 (h, w must be even).
Tensor3 avgpool2(const Tensor3& x);
Tensor3 avgpool2_backward(const Tensor3& gout, int in_h, int in_w);

/// Per-channel spatial mean.
Vec global_avgpool(const Tensor3& x);
Tensor3 global_avgpool_backward(const Vec& gout, int c, int h, int w);

/// f = z / ||z||; backward maps df -> dz.
struct L2NormCache {
  Vec f;
  double norm = 0.0;
};
Vec l2_normalize(const Vec& z, L2NormCache& c);
Vec l2_normalize_backward(const Vec& gf, const L2NormCache& c);

Vec softmax(const Vec& logits);

// ---------------------------------------------------------------------------

/// One Adam instance per loss term; stepping one never touches another's
/// moments. Frozen params are skipped entirely (weights and moments).
class Adam {
 public:
  Adam(std::vector<Param*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  /// Apply one update from the params' accumulated gradients, then clear
  /// the gradients of the managed params.
  void step();

  const std::vector<Param*>& params() const { return params_; }
  std::uint64_t moment_checksum() const;

 private:
  std::vector<Param*> params_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Vec> m_, v_;
};

}  // namespace sfda::nn
