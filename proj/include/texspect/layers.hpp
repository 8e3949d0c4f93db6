#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "texspect/tensor.hpp"

namespace texspect {

/// Trainable parameter vector with its gradient accumulator.
struct Param {
  std::vector<double> w, g;

  explicit Param(size_t n = 0, double fill = 0.0) : w(n, fill), g(n, 0.0) {}
  size_t size() const { return w.size(); }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

enum class Activation { None, LeakyReLU, ReLU, Tanh };

inline constexpr double kLeakySlope = 0.2;
inline constexpr double kBatchNormEps = 1e-5;

using MatX = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

// im2col for a 3x3 kernel with zero padding 1: (in_c * 9) x (h * w).
inline void im2col3x3(const Tensor& x, MatX& cols) {
  const int hw = x.h * x.w;
  cols.setZero(x.c * 9, hw);
  for (int c = 0; c < x.c; ++c) {
    const double* plane = x.v.data() + static_cast<size_t>(c) * hw;
    for (int ky = -1; ky <= 1; ++ky) {
      for (int kx = -1; kx <= 1; ++kx) {
        const int row = c * 9 + (ky + 1) * 3 + (kx + 1);
        for (int y = 0; y < x.h; ++y) {
          const int sy = y + ky;
          if (sy < 0 || sy >= x.h) continue;
          const int x0 = std::max(0, -kx);
          const int x1 = std::min(x.w, x.w - kx);
          for (int px = x0; px < x1; ++px)
            cols(row, y * x.w + px) = plane[sy * x.w + px + kx];
        }
      }
    }
  }
}

// Transpose of im2col: scatter-add column gradients back onto the image grid.
inline void col2im3x3(const MatX& dcols, Tensor& dx) {
  const int hw = dx.h * dx.w;
  for (int c = 0; c < dx.c; ++c) {
    double* plane = dx.v.data() + static_cast<size_t>(c) * hw;
    for (int ky = -1; ky <= 1; ++ky) {
      for (int kx = -1; kx <= 1; ++kx) {
        const int row = c * 9 + (ky + 1) * 3 + (kx + 1);
        for (int y = 0; y < dx.h; ++y) {
          const int sy = y + ky;
          if (sy < 0 || sy >= dx.h) continue;
          const int x0 = std::max(0, -kx);
          const int x1 = std::min(dx.w, dx.w - kx);
          for (int px = x0; px < x1; ++px)
            plane[sy * dx.w + px + kx] += dcols(row, y * dx.w + px);
        }
      }
    }
  }
}

}  // namespace detail

/// 3x3 convolution, zero padding 1, spatial size preserved.
struct Conv3x3 {
  int in_c = 0, out_c = 0;
  Param weight;  // out_c x (in_c * 9), row-major
  Param bias;    // out_c

  MatX cols;  // cached im2col of the last forward input

  Conv3x3() = default;
  Conv3x3(int in, int out) : in_c(in), out_c(out), weight(static_cast<size_t>(out) * in * 9), bias(out) {}

  void init(std::mt19937_64& rng, double stddev = 0.02) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& v : weight.w) v = dist(rng);
    std::fill(bias.w.begin(), bias.w.end(), 0.0);
  }

  Tensor forward(const Tensor& x) {
    detail::im2col3x3(x, cols);
    Tensor out(out_c, x.h, x.w);
    Eigen::Map<const RowMat> wm(weight.w.data(), out_c, in_c * 9);
    Eigen::Map<RowMat> om(out.v.data(), out_c, x.h * x.w);
    om.noalias() = wm * cols;
    for (int c = 0; c < out_c; ++c) om.row(c).array() += bias.w[c];
    return out;
  }

  Tensor backward(const Tensor& dout) {
    Eigen::Map<const RowMat> dom(dout.v.data(), out_c, dout.h * dout.w);
    Eigen::Map<RowMat> gw(weight.g.data(), out_c, in_c * 9);
    gw.noalias() += dom * cols.transpose();
    // scalar accumulation: vectorized reductions change summation order with
    // buffer alignment, which breaks bit-reproducible training
    const int hw = dout.h * dout.w;
    for (int c = 0; c < out_c; ++c) {
      double acc = 0.0;
      const double* p = dout.v.data() + static_cast<size_t>(c) * hw;
      for (int i = 0; i < hw; ++i) acc += p[i];
      bias.g[c] += acc;
    }
    Eigen::Map<const RowMat> wm(weight.w.data(), out_c, in_c * 9);
    MatX dcols = wm.transpose() * dom;
    Tensor dx(in_c, dout.h, dout.w);
    detail::col2im3x3(dcols, dx);
    return dx;
  }
};

/// Per-channel normalization over the spatial extent, batch of one. Current
/// batch statistics are used in both training and inference, so the operator
/// is stateless apart from its affine parameters.
struct BatchNorm {
  int channels = 0;
  Param gamma, beta;

  Tensor xhat;
  std::vector<double> invstd;

  BatchNorm() = default;
  explicit BatchNorm(int c) : channels(c), gamma(c, 1.0), beta(c, 0.0) {}

  Tensor forward(const Tensor& x) {
    const int n = x.plane();
    Tensor out(x.c, x.h, x.w);
    xhat = Tensor(x.c, x.h, x.w);
    invstd.assign(channels, 0.0);
    for (int c = 0; c < channels; ++c) {
      const double* p = x.v.data() + static_cast<size_t>(c) * n;
      double mean = 0.0;
      for (int i = 0; i < n; ++i) mean += p[i];
      mean /= n;
      double var = 0.0;
      for (int i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
      var /= n;
      const double is = 1.0 / std::sqrt(var + kBatchNormEps);
      invstd[c] = is;
      double* xh = xhat.v.data() + static_cast<size_t>(c) * n;
      double* o = out.v.data() + static_cast<size_t>(c) * n;
      for (int i = 0; i < n; ++i) {
        xh[i] = (p[i] - mean) * is;
        o[i] = gamma.w[c] * xh[i] + beta.w[c];
      }
    }
    return out;
  }

  Tensor backward(const Tensor& dout) {
    const int n = dout.plane();
    Tensor dx(dout.c, dout.h, dout.w);
    for (int c = 0; c < channels; ++c) {
      const double* d = dout.v.data() + static_cast<size_t>(c) * n;
      const double* xh = xhat.v.data() + static_cast<size_t>(c) * n;
      double sum_d = 0.0, sum_dxh = 0.0;
      for (int i = 0; i < n; ++i) {
        sum_d += d[i];
        sum_dxh += d[i] * xh[i];
      }
      gamma.g[c] += sum_dxh;
      beta.g[c] += sum_d;
      const double scale = gamma.w[c] * invstd[c] / n;
      double* o = dx.v.data() + static_cast<size_t>(c) * n;
      for (int i = 0; i < n; ++i) o[i] = scale * (n * d[i] - sum_d - xh[i] * sum_dxh);
    }
    return dx;
  }
};

/// Conv3x3 + optional BatchNorm + pointwise activation.
struct ConvBlock {
  Conv3x3 conv;
  bool has_bn = false;
  BatchNorm bn;
  Activation act = Activation::None;

  Tensor act_out;  // cached activation output for backward

  ConvBlock() = default;
  ConvBlock(int in, int out, bool with_bn, Activation a)
      : conv(in, out), has_bn(with_bn), bn(with_bn ? out : 0), act(a) {}

  void init(std::mt19937_64& rng) { conv.init(rng); }

  Tensor forward(const Tensor& x) {
    Tensor t = conv.forward(x);
    if (has_bn) t = bn.forward(t);
    switch (act) {
      case Activation::None:
        break;
      case Activation::LeakyReLU:
        for (double& v : t.v) v = v > 0 ? v : kLeakySlope * v;
        break;
      case Activation::ReLU:
        for (double& v : t.v) v = v > 0 ? v : 0.0;
        break;
      case Activation::Tanh:
        for (double& v : t.v) v = std::tanh(v);
        break;
    }
    act_out = t;
    return t;
  }

  Tensor backward(const Tensor& dout) {
    Tensor d = dout;
    switch (act) {
      case Activation::None:
        break;
      case Activation::LeakyReLU:
        for (size_t i = 0; i < d.v.size(); ++i)
          if (act_out.v[i] <= 0) d.v[i] *= kLeakySlope;
        break;
      case Activation::ReLU:
        for (size_t i = 0; i < d.v.size(); ++i)
          if (act_out.v[i] <= 0) d.v[i] = 0.0;
        break;
      case Activation::Tanh:
        for (size_t i = 0; i < d.v.size(); ++i) d.v[i] *= 1.0 - act_out.v[i] * act_out.v[i];
        break;
    }
    if (has_bn) d = bn.backward(d);
    return conv.backward(d);
  }

  std::vector<Param*> params() {
    std::vector<Param*> ps{&conv.weight, &conv.bias};
    if (has_bn) {
      ps.push_back(&bn.gamma);
      ps.push_back(&bn.beta);
    }
    return ps;
  }
};

/// Adaptive-moment optimizer over a set of parameter vectors.
struct Adam {
  double lr = 5e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t t = 0;
  std::vector<std::vector<double>> m, v;

  void attach(const std::vector<Param*>& params) {
    m.clear();
    v.clear();
    for (const Param* p : params) {
      m.emplace_back(p->size(), 0.0);
      v.emplace_back(p->size(), 0.0);
    }
    t = 0;
  }

  void step(const std::vector<Param*>& params) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t k = 0; k < params.size(); ++k) {
      Param& p = *params[k];
      for (size_t i = 0; i < p.size(); ++i) {
        m[k][i] = beta1 * m[k][i] + (1.0 - beta1) * p.g[i];
        v[k][i] = beta2 * v[k][i] + (1.0 - beta2) * p.g[i] * p.g[i];
        p.w[i] -= lr * (m[k][i] / bc1) / (std::sqrt(v[k][i] / bc2) + eps);
      }
    }
  }
};

inline void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace texspect
