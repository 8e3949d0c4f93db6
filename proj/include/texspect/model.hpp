#pragma once

#include <random>
#include <vector>

#include "texspect/discriminator.hpp"
#include "texspect/generator.hpp"
#include "texspect/image.hpp"

namespace texspect {

/// One pyramid level's generator, discriminator and noise amplitude.
struct ScaleModel {
  int index = 0;  // 0 = finest
  int level_h = 0, level_w = 0;
  double sigma = 0.0;
  GeneratorNet generator;
  DiscriminatorNet discriminator;
};

/// Trained pyramid, finest first (models[n] serves pyramid level n), plus the
/// fixed reconstruction noise drawn once at the coarsest scale.
struct ModelStack {
  std::vector<ScaleModel> models;
  Tensor zstar;  // coarsest-level noise anchoring the reconstruction cascade
  double scale_factor = 0.75;
  int min_dim = 24;
  int img_channels = 1;

  int depth() const { return static_cast<int>(models.size()); }
  int coarsest() const { return depth() - 1; }
};

/// Cascade from the coarsest scale down to `finest`, drawing fresh noise at
/// every scale. Returns generated images indexed like the stack (finest
/// first); entries below `finest` are empty.
inline std::vector<Image> generate_cascade(ModelStack& stack, std::mt19937_64& rng,
                                           int finest = 0) {
  if (stack.models.empty()) throw ParameterError("generate: empty model stack");
  std::vector<Image> out(stack.models.size());
  const int n_top = stack.coarsest();
  for (int n = n_top; n >= finest; --n) {
    ScaleModel& m = stack.models[n];
    Tensor noise = gaussian_noise(stack.img_channels, m.level_h, m.level_w, rng);
    const Image* coarser = n == n_top ? nullptr : &out[n + 1];
    out[n] = generate_at_scale(m.generator, m.sigma, noise, coarser, m.level_h, m.level_w);
  }
  return out;
}

/// Deterministic sampling entry point: seeds one generator-noise stream.
inline std::vector<Image> generate_full_stack(ModelStack& stack, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return generate_cascade(stack, rng, 0);
}

/// Reconstruction cascade: the fixed noise z* at the coarsest scale, zero
/// noise elsewhere. A deterministic function of the parameters.
inline std::vector<Image> reconstruct_cascade(ModelStack& stack, int finest = 0) {
  if (stack.models.empty()) throw ParameterError("reconstruct: empty model stack");
  std::vector<Image> out(stack.models.size());
  const int n_top = stack.coarsest();
  for (int n = n_top; n >= finest; --n) {
    ScaleModel& m = stack.models[n];
    Tensor noise = n == n_top ? stack.zstar : Tensor(stack.img_channels, m.level_h, m.level_w);
    const double sigma = n == n_top ? 1.0 : 0.0;
    const Image* coarser = n == n_top ? nullptr : &out[n + 1];
    out[n] = generate_at_scale(m.generator, sigma, noise, coarser, m.level_h, m.level_w);
  }
  return out;
}

}  // namespace texspect
