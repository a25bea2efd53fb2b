#include "sfda/nn.hpp"

#include <cmath>
#include <cstring>

#include "sfda/errors.hpp"

namespace sfda::nn {

void init_normal(Param& p, double stddev, std::uint64_t seed,
                 const std::string& tag) {
  Rng rng = make_rng(seed, "init:" + tag);
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < p.w.size(); ++i) p.w[i] = dist(rng);
}

std::uint64_t checksum(const std::vector<const Param*>& params) {
  std::uint64_t h = 14695981039346656037ull;
  for (const Param* p : params) {
    for (Eigen::Index i = 0; i < p->w.size(); ++i) {
      std::uint64_t bits;
      double v = p->w[i];
      std::memcpy(&bits, &v, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

void Conv2d::init(int in_channels, int out_channels, int k, int stride_,
                  int pad_, std::uint64_t seed, const std::string& tag) {
  in_c = in_channels;
  out_c = out_channels;
  kernel = k;
  stride = stride_;
  pad = pad_;
  int fan_in = in_c * k * k;
  weight.init_zero(static_cast<Eigen::Index>(out_c) * fan_in);
  bias.init_zero(out_c);
  init_normal(weight, std::sqrt(2.0 / fan_in), seed, tag + ".w");
}

Tensor3 Conv2d::forward(const Tensor3& x, Cache& c) const {
  const int oh = out_h(x.h), ow = out_w(x.w);
  const int patch = in_c * kernel * kernel;
  c.in_h = x.h;
  c.in_w = x.w;
  c.cols.resize(patch, oh * ow);

  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      int col = oy * ow + ox;
      int row = 0;
      for (int ci = 0; ci < in_c; ++ci)
        for (int ky = 0; ky < kernel; ++ky)
          for (int kx = 0; kx < kernel; ++kx, ++row) {
            int iy = oy * stride + ky - pad;
            int ix = ox * stride + kx - pad;
            c.cols(row, col) =
                (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w)
                    ? x.at(ci, iy, ix)
                    : 0.0;
          }
    }
  }

  Eigen::Map<const Mat> w(weight.w.data(), in_c * kernel * kernel, out_c);
  Tensor3 out(out_c, oh, ow);
  Eigen::Map<Mat> out_mat(out.data.data(), oh * ow, out_c);
  out_mat.noalias() = c.cols.transpose() * w;
  for (int co = 0; co < out_c; ++co)
    out_mat.col(co).array() += bias.w[co];
  // Tensor3 is (c, y, x) contiguous; out_mat columns are per channel, so
  // the mapping above already matches the layout.
  return out;
}

Tensor3 Conv2d::backward(const Tensor3& gout, const Cache& c) {
  const int oh = gout.h, ow = gout.w;
  const int patch = in_c * kernel * kernel;
  Eigen::Map<const Mat> gout_mat(gout.data.data(), oh * ow, out_c);

  Eigen::Map<Mat> gw(weight.g.data(), patch, out_c);
  gw.noalias() += c.cols * gout_mat;
  for (int co = 0; co < out_c; ++co) bias.g[co] += gout_mat.col(co).sum();

  Eigen::Map<const Mat> w(weight.w.data(), patch, out_c);
  Mat gcols = w * gout_mat.transpose();  // patch x (oh*ow)

  Tensor3 gin(in_c, c.in_h, c.in_w);
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      int col = oy * ow + ox;
      int row = 0;
      for (int ci = 0; ci < in_c; ++ci)
        for (int ky = 0; ky < kernel; ++ky)
          for (int kx = 0; kx < kernel; ++kx, ++row) {
            int iy = oy * stride + ky - pad;
            int ix = ox * stride + kx - pad;
            if (iy >= 0 && iy < c.in_h && ix >= 0 && ix < c.in_w)
              gin.at(ci, iy, ix) += gcols(row, col);
          }
    }
  return gin;
}

void Linear::init(int in, int out, std::uint64_t seed, const std::string& tag) {
  in_dim = in;
  out_dim = out;
  weight.init_zero(static_cast<Eigen::Index>(out) * in);
  bias.init_zero(out);
  init_normal(weight, std::sqrt(2.0 / in), seed, tag + ".w");
}

Vec Linear::forward(const Vec& x, Cache& c) const {
  c.input = x;
  Eigen::Map<const Mat> w(weight.w.data(), in_dim, out_dim);
  return w.transpose() * x + bias.w;
}

Vec Linear::backward(const Vec& gout, const Cache& c) {
  Eigen::Map<Mat> gw(weight.g.data(), in_dim, out_dim);
  gw.noalias() += c.input * gout.transpose();
  bias.g += gout;
  Eigen::Map<const Mat> w(weight.w.data(), in_dim, out_dim);
  return w * gout;
}

Vec relu(const Vec& x, ReluCache& c) {
  c.mask = (x.array() > 0.0).cast<double>();
  return x.cwiseProduct(c.mask);
}

Vec relu_backward(const Vec& gout, const ReluCache& c) {
  return gout.cwiseProduct(c.mask);
}

Vec leaky_relu(const Vec& x, ReluCache& c, double slope) {
  c.mask = (x.array() > 0.0).select(Vec::Ones(x.size()),
                                    Vec::Constant(x.size(), slope));
  return x.cwiseProduct(c.mask);
}

Tensor3 relu(const Tensor3& x, ReluCache& c) {
  Tensor3 out = x;
  c.mask = (x.data.array() > 0.0).cast<double>();
  out.data = x.data.cwiseProduct(c.mask);
  return out;
}

Tensor3 relu_backward_t(const Tensor3& gout, const ReluCache& c, int ch, int h,
                        int w) {
  Tensor3 gin(ch, h, w);
  gin.data = gout.data.cwiseProduct(c.mask);
  return gin;
}

Tensor3 avgpool2(const Tensor3& x) {
  if (x.h % 2 != 0 || x.w % 2 != 0)
    throw NumericError("avgpool2 requires even spatial dims");
  Tensor3 out(x.c, x.h / 2, x.w / 2);
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < out.h; ++y)
      for (int xx = 0; xx < out.w; ++xx)
        out.at(c, y, xx) =
            0.25 * (x.at(c, 2 * y, 2 * xx) + x.at(c, 2 * y, 2 * xx + 1) +
                    x.at(c, 2 * y + 1, 2 * xx) + x.at(c, 2 * y + 1, 2 * xx + 1));
  return out;
}

Tensor3 avgpool2_backward(const Tensor3& gout, int in_h, int in_w) {
  Tensor3 gin(gout.c, in_h, in_w);
  for (int c = 0; c < gout.c; ++c)
    for (int y = 0; y < gout.h; ++y)
      for (int x = 0; x < gout.w; ++x) {
        double g = 0.25 * gout.at(c, y, x);
        gin.at(c, 2 * y, 2 * x) = g;
        gin.at(c, 2 * y, 2 * x + 1) = g;
        gin.at(c, 2 * y + 1, 2 * x) = g;
        gin.at(c, 2 * y + 1, 2 * x + 1) = g;
      }
  return gin;
}

Vec global_avgpool(const Tensor3& x) {
  Vec out(x.c);
  const int area = x.h * x.w;
  for (int c = 0; c < x.c; ++c)
    out[c] = x.data.segment(static_cast<Eigen::Index>(c) * area, area).mean();
  return out;
}

Tensor3 global_avgpool_backward(const Vec& gout, int c, int h, int w) {
  Tensor3 gin(c, h, w);
  const int area = h * w;
  for (int ci = 0; ci < c; ++ci)
    gin.data.segment(static_cast<Eigen::Index>(ci) * area, area)
        .setConstant(gout[ci] / area);
  return gin;
}

Vec l2_normalize(const Vec& z, L2NormCache& c) {
  c.norm = z.norm();
  if (c.norm < 1e-12) throw NumericError("cannot normalize near-zero feature");
  c.f = z / c.norm;
  return c.f;
}

Vec l2_normalize_backward(const Vec& gf, const L2NormCache& c) {
  return (gf - c.f * c.f.dot(gf)) / c.norm;
}

Vec softmax(const Vec& logits) {
  Vec shifted = logits.array() - logits.maxCoeff();
  Vec e = shifted.array().exp();
  return e / e.sum();
}

Adam::Adam(std::vector<Param*> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (Param* p : params_) {
    m_.push_back(Vec::Zero(p->w.size()));
    v_.push_back(Vec::Zero(p->w.size()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    if (p->frozen) {
      p->zero_grad();
      continue;
    }
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->g;
    v_[i] = beta2_ * v_[i].array() + (1.0 - beta2_) * p->g.array().square();
    Vec mhat = m_[i] / bc1;
    Vec vhat = v_[i] / bc2;
    p->w.array() -= lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
    p->zero_grad();
  }
}

std::uint64_t Adam::moment_checksum() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::uint64_t bits;
      double d = v[i];
      std::memcpy(&bits, &d, sizeof(bits));
      h ^= bits;
      h *= 1099511628211ull;
    }
  };
  for (const Vec& v : m_) mix(v);
  for (const Vec& v : v_) mix(v);
  return h;
}

}  // namespace sfda::nn
