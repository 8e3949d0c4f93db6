#pragma once

#include <array>
#include <random>
#include <vector>

#include "texspect/directional.hpp"
#include "texspect/image.hpp"
#include "texspect/layers.hpp"

namespace texspect {

enum class TextureModule { Full, SharedBranches, StemOnly };

inline TextureModule texture_module_from_string(const std::string& s) {
  if (s == "full") return TextureModule::Full;
  if (s == "shared") return TextureModule::SharedBranches;
  if (s == "stem-only") return TextureModule::StemOnly;
  throw ParameterError("unknown texture module mode: " + s);
}

inline const char* to_string(TextureModule m) {
  switch (m) {
    case TextureModule::Full: return "full";
    case TextureModule::SharedBranches: return "shared";
    case TextureModule::StemOnly: return "stem-only";
  }
  return "full";
}

namespace detail {

inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  Tensor out(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), out.v.begin());
  std::copy(b.v.begin(), b.v.end(), out.v.begin() + a.v.size());
  return out;
}

inline Tensor slice_channels(const Tensor& t, int first, int count) {
  Tensor out(count, t.h, t.w);
  const size_t plane = static_cast<size_t>(t.h) * t.w;
  std::copy(t.v.begin() + first * plane, t.v.begin() + (first + count) * plane, out.v.begin());
  return out;
}

}  // namespace detail

/// Texture-perceiving discriminator: a 3-block feature stem, eight
/// direction-guided branches (each conv-block fed the stem features
/// concatenated with one fixed trend map), and a two-conv fusion head ending
/// in a sigmoid. All stages preserve H x W, so the distinguish map is
/// per-pixel at the input resolution.
struct DiscriminatorNet {
  int img_channels = 1;
  int stem_width = 32;
  int branch_width = 8;
  TextureModule mode = TextureModule::Full;

  std::vector<ConvBlock> stem;                          // 3 blocks, img_c -> 32 -> 32 -> 32
  std::array<ConvBlock, kDirectionCount> branches;      // (32+1) -> 8, BN + ReLU
  std::vector<ConvBlock> head;                          // 64 -> 32 -> 1 (32 -> 32 -> 1 stem-only)

  Tensor stem_out;
  std::array<Tensor, kDirectionCount> branch_out;

  DiscriminatorNet() = default;
  DiscriminatorNet(int channels, TextureModule m = TextureModule::Full, int width = 32,
                   int branch_w = 8)
      : img_channels(channels), stem_width(width), branch_width(branch_w), mode(m) {
    stem.emplace_back(channels, width, true, Activation::LeakyReLU);
    stem.emplace_back(width, width, true, Activation::LeakyReLU);
    stem.emplace_back(width, width, true, Activation::LeakyReLU);
    for (auto& b : branches) b = ConvBlock(width + 1, branch_w, true, Activation::ReLU);
    const int head_in = mode == TextureModule::StemOnly ? width : branch_w * kDirectionCount;
    head.emplace_back(head_in, width, false, Activation::LeakyReLU);
    head.emplace_back(width, 1, false, Activation::None);
  }

  void init(std::mt19937_64& rng) {
    for (auto& b : stem) b.init(rng);
    for (auto& b : branches) b.init(rng);
    for (auto& b : head) b.init(rng);
    if (mode == TextureModule::SharedBranches) sync_shared_params();
  }

  void sync_shared_params() {
    for (int i = 1; i < kDirectionCount; ++i) {
      branches[i].conv.weight.w = branches[0].conv.weight.w;
      branches[i].conv.bias.w = branches[0].conv.bias.w;
      branches[i].bn.gamma.w = branches[0].bn.gamma.w;
      branches[i].bn.beta.w = branches[0].bn.beta.w;
    }
  }

  static constexpr int kMinInput = 7;  // stem receptive field

  Tensor extract_features(const Tensor& image) {
    if (image.h < kMinInput || image.w < kMinInput)
      throw ParameterError("discriminator: input below receptive-field minimum");
    if (image.c != img_channels) throw ParameterError("discriminator: channel mismatch");
    Tensor t = image;
    for (auto& b : stem) t = b.forward(t);
    return t;
  }

  Tensor direction_branch(int i, const Tensor& features, const Tensor& trend_map) {
    if (trend_map.h != features.h || trend_map.w != features.w)
      throw ParameterError("discriminator: trend map size mismatch");
    return branches[i].forward(detail::concat_channels(features, trend_map));
  }

  /// Pre-sigmoid map, 1 x H x W. Intermediates are cached for backward.
  Tensor forward_logits(const Tensor& image) {
    if (mode == TextureModule::SharedBranches) sync_shared_params();
    stem_out = extract_features(image);
    Tensor head_in;
    if (mode == TextureModule::StemOnly) {
      head_in = stem_out;
    } else {
      const DirectionalMapSet& dirs = cached_directional_set(image.h, image.w);
      for (int i = 0; i < kDirectionCount; ++i)
        branch_out[i] = direction_branch(i, stem_out, dirs.maps[i]);
      head_in = Tensor(branch_width * kDirectionCount, image.h, image.w);
      const size_t stride = branch_out[0].v.size();
      for (int i = 0; i < kDirectionCount; ++i)
        std::copy(branch_out[i].v.begin(), branch_out[i].v.end(),
                  head_in.v.begin() + i * stride);
    }
    Tensor t = head_in;
    for (auto& b : head) t = b.forward(t);
    return t;
  }

  Tensor discriminate(const Tensor& image) {
    Tensor m = forward_logits(image);
    for (double& v : m.v) v = sigmoid(v);
    return m;
  }

  Tensor backward(const Tensor& dlogits) {
    Tensor d = dlogits;
    for (auto it = head.rbegin(); it != head.rend(); ++it) d = it->backward(d);
    Tensor dstem;
    if (mode == TextureModule::StemOnly) {
      dstem = d;
    } else {
      dstem = Tensor(stem_width, d.h, d.w);
      for (int i = 0; i < kDirectionCount; ++i) {
        Tensor dbranch_in =
            branches[i].backward(detail::slice_channels(d, i * branch_width, branch_width));
        // drop the trend-map channel: it is fixed, not learned
        Tensor df = detail::slice_channels(dbranch_in, 0, stem_width);
        dstem += df;
      }
      if (mode == TextureModule::SharedBranches) accumulate_shared_grads();
    }
    for (auto it = stem.rbegin(); it != stem.rend(); ++it) dstem = it->backward(dstem);
    return dstem;
  }

  void accumulate_shared_grads() {
    for (int i = 1; i < kDirectionCount; ++i) {
      auto fold = [](Param& into, Param& from) {
        for (size_t k = 0; k < into.g.size(); ++k) into.g[k] += from.g[k];
        from.zero_grad();
      };
      fold(branches[0].conv.weight, branches[i].conv.weight);
      fold(branches[0].conv.bias, branches[i].conv.bias);
      fold(branches[0].bn.gamma, branches[i].bn.gamma);
      fold(branches[0].bn.beta, branches[i].bn.beta);
    }
  }

  /// Trainable parameters. In shared-branch mode only branch 0 is optimized;
  /// the others mirror it on the next forward.
  std::vector<Param*> params() {
    std::vector<Param*> ps;
    for (auto& b : stem)
      for (Param* p : b.params()) ps.push_back(p);
    if (mode != TextureModule::StemOnly) {
      const int nb = mode == TextureModule::SharedBranches ? 1 : kDirectionCount;
      for (int i = 0; i < nb; ++i)
        for (Param* p : branches[i].params()) ps.push_back(p);
    }
    for (auto& b : head)
      for (Param* p : b.params()) ps.push_back(p);
    return ps;
  }

  /// Every parameter including mirrored branches, for serialization.
  std::vector<Param*> all_params() {
    std::vector<Param*> ps;
    for (auto& b : stem)
      for (Param* p : b.params()) ps.push_back(p);
    for (auto& b : branches)
      for (Param* p : b.params()) ps.push_back(p);
    for (auto& b : head)
      for (Param* p : b.params()) ps.push_back(p);
    return ps;
  }
};

}  // namespace texspect
