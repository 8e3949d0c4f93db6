#pragma once

#include <optional>
#include <random>
#include <vector>

#include "texspect/image.hpp"
#include "texspect/layers.hpp"

namespace texspect {

/// Residual generator: 5 conv-blocks. Blocks 1-4 are 3x3 conv + BatchNorm +
/// LeakyReLU, block 5 is 3x3 conv + tanh. Zero padding keeps H x W.
struct GeneratorNet {
  int img_channels = 1;
  int width = 32;
  std::vector<ConvBlock> blocks;

  GeneratorNet() = default;
  GeneratorNet(int channels, int w) : img_channels(channels), width(w) {
    blocks.emplace_back(channels, w, true, Activation::LeakyReLU);
    for (int i = 0; i < 3; ++i) blocks.emplace_back(w, w, true, Activation::LeakyReLU);
    blocks.emplace_back(w, channels, false, Activation::Tanh);
  }

  void init(std::mt19937_64& rng) {
    for (auto& b : blocks) b.init(rng);
  }

  static constexpr int kMinInput = 11;  // receptive field of five 3x3 blocks

  Tensor residual(const Tensor& input) {
    if (input.h < kMinInput || input.w < kMinInput)
      throw ParameterError("generator: input below receptive-field minimum");
    if (input.c != img_channels) throw ParameterError("generator: channel mismatch");
    Tensor t = input;
    for (auto& b : blocks) t = b.forward(t);
    return t;
  }

  Tensor backward(const Tensor& dres) {
    Tensor d = dres;
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) d = it->backward(d);
    return d;
  }

  std::vector<Param*> params() {
    std::vector<Param*> ps;
    for (auto& b : blocks)
      for (Param* p : b.params()) ps.push_back(p);
    return ps;
  }
};

/// One forward pass through a scale, with intermediates kept for backprop.
struct GenForward {
  Tensor prior;      // up(coarser), or zeros at the coarsest scale
  Tensor net_input;  // prior + sigma * noise
  Tensor pre_clamp;  // prior + residual
  Image out;         // clamped to [-1, 1]
};

inline GenForward generate_at_scale_fwd(GeneratorNet& net, double sigma, const Tensor& noise,
                                        const Image* coarser, int level_h, int level_w) {
  GenForward f;
  f.prior = coarser ? resample(*coarser, level_h, level_w) : Tensor(net.img_channels, level_h, level_w);
  if (noise.c != f.prior.c || noise.h != level_h || noise.w != level_w)
    throw ParameterError("generator: noise shape mismatch");
  f.net_input = f.prior;
  for (size_t i = 0; i < f.net_input.v.size(); ++i) f.net_input.v[i] += sigma * noise.v[i];
  Tensor res = net.residual(f.net_input);
  f.pre_clamp = f.prior;
  f.pre_clamp += res;
  f.out = f.pre_clamp;
  f.out.clamp(-1.0, 1.0);
  return f;
}

/// Gradient of the clamp: zero where the pre-clamp sum left [-1, 1].
inline Tensor clamp_backward(const GenForward& f, const Tensor& dout) {
  Tensor d = dout;
  for (size_t i = 0; i < d.v.size(); ++i)
    if (f.pre_clamp.v[i] < -1.0 || f.pre_clamp.v[i] > 1.0) d.v[i] = 0.0;
  return d;
}

inline Image generate_at_scale(GeneratorNet& net, double sigma, const Tensor& noise,
                               const Image* coarser, int level_h, int level_w) {
  return generate_at_scale_fwd(net, sigma, noise, coarser, level_h, level_w).out;
}

}  // namespace texspect
