#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "texspect/checkpoint.hpp"
#include "texspect/model.hpp"

namespace texspect {

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int iters_per_scale = 2000;
  double lr_g = 5e-4;
  double lr_d = 5e-4;
  double lambda_recon = 10.0;
  int d_steps = 3;
  int g_steps = 3;
  uint64_t seed = 0;
  double scale_factor = 0.75;
  int min_dim = 24;
  int max_scales = 0;  // 0 = as many as min_dim allows
  int gen_width = 32;
  int disc_width = 32;
  int branch_width = 8;
  TextureModule texture_module = TextureModule::Full;
  std::string log_path;        // line-delimited loss records, optional
  std::string checkpoint_dir;  // per-scale checkpoints, optional

  void validate() const {
    if (iters_per_scale < 0 || lr_g <= 0 || lr_d <= 0 || lambda_recon < 0 || d_steps < 1 ||
        g_steps < 1 || gen_width < 1 || disc_width < 1 || branch_width < 1)
      throw ParameterError("train config: values must be positive");
    if (scale_factor <= 0 || scale_factor >= 1) throw ParameterError("train config: r in (0,1)");
    if (min_dim < 4) throw ParameterError("train config: min_dim >= 4");
  }
};

struct LossRecord {
  int scale = 0;
  int iteration = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double recon_loss = 0.0;
};

struct TrainResult {
  ModelStack stack;
  std::vector<LossRecord> log;
};

/// sigma_n = RMSE between the up-scaled coarser reconstruction and the level
/// image; sigma_N = 1 at the coarsest scale by convention.
inline double compute_noise_amplitude(const Image& level_image,
                                      const Image& reconstruction_from_coarser) {
  if (!level_image.same_shape(reconstruction_from_coarser))
    throw ParameterError("noise amplitude: shape mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < level_image.v.size(); ++i) {
    const double d = level_image.v[i] - reconstruction_from_coarser.v[i];
    acc += d * d;
  }
  return std::sqrt(acc / level_image.v.size());
}

namespace detail {

inline double softplus(double x) {
  // numerically stable log(1 + e^x)
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// BCE-with-logits against a constant target over the whole map. Fills dlogits
// with the gradient of the mean loss.
inline double bce_with_logits(const Tensor& logits, double target, Tensor& dlogits) {
  const double inv_n = 1.0 / logits.v.size();
  dlogits = Tensor(logits.c, logits.h, logits.w);
  double loss = 0.0;
  for (size_t i = 0; i < logits.v.size(); ++i) {
    const double s = logits.v[i];
    loss += softplus(s) - target * s;
    dlogits.v[i] = (sigmoid(s) - target) * inv_n;
  }
  return loss * inv_n;
}

inline void dump_diagnostics(const std::string& path, int scale, int iter, double d_loss,
                             double g_loss, double recon_loss) {
  std::ofstream out(path);
  nlohmann::json j{{"scale", scale},
                   {"iteration", iter},
                   {"d_loss", d_loss},
                   {"g_loss", g_loss},
                   {"recon_loss", recon_loss}};
  out << j.dump(2) << "\n";
}

}  // namespace detail

/// Adversarial training of one scale; all coarser scales must already be
/// trained (their parameters are read but never written). `rec_prior` is the
/// frozen reconstruction at level n+1 (null at the coarsest scale).
inline void train_scale(ModelStack& stack, int n, const Image& real, const Image* rec_prior,
                        const TrainConfig& cfg, std::mt19937_64& rng,
                        std::vector<LossRecord>* log = nullptr, std::ostream* log_stream = nullptr) {
  ScaleModel& sm = stack.models[n];
  GeneratorNet& G = sm.generator;
  DiscriminatorNet& D = sm.discriminator;
  const int n_top = stack.coarsest();

  Adam opt_g, opt_d;
  opt_g.lr = cfg.lr_g;
  opt_d.lr = cfg.lr_d;
  auto gp = G.params();
  auto dp = D.params();
  opt_g.attach(gp);
  opt_d.attach(dp);

  const Tensor zero_noise(stack.img_channels, sm.level_h, sm.level_w);

  auto sample_fake = [&](std::mt19937_64& r) -> GenForward {
    const Image* coarser = nullptr;
    std::vector<Image> cascade;
    if (n < n_top) {
      cascade = generate_cascade(stack, r, n + 1);
      coarser = &cascade[n + 1];
    }
    Tensor noise = gaussian_noise(stack.img_channels, sm.level_h, sm.level_w, r);
    return generate_at_scale_fwd(G, sm.sigma, noise, coarser, sm.level_h, sm.level_w);
  };

  for (int iter = 1; iter <= cfg.iters_per_scale; ++iter) {
    double d_loss = 0.0, g_loss = 0.0, recon_loss = 0.0;

    for (int k = 0; k < cfg.d_steps; ++k) {
      zero_grads(dp);
      Tensor dlogits;
      Tensor s_real = D.forward_logits(real);
      double loss = detail::bce_with_logits(s_real, 1.0, dlogits);
      D.backward(dlogits);
      GenForward fake = sample_fake(rng);
      Tensor s_fake = D.forward_logits(fake.out);
      loss += detail::bce_with_logits(s_fake, 0.0, dlogits);
      D.backward(dlogits);
      opt_d.step(dp);
      d_loss = loss;
    }

    for (int k = 0; k < cfg.g_steps; ++k) {
      zero_grads(gp);

      GenForward fake = sample_fake(rng);
      Tensor s_fake = D.forward_logits(fake.out);
      Tensor dlogits;
      const double adv = detail::bce_with_logits(s_fake, 1.0, dlogits);
      Tensor dfake = D.backward(dlogits);
      G.backward(clamp_backward(fake, dfake));

      double rec = 0.0;
      if (cfg.lambda_recon > 0.0) {
        GenForward rf = n == n_top
                            ? generate_at_scale_fwd(G, 1.0, stack.zstar, nullptr, sm.level_h, sm.level_w)
                            : generate_at_scale_fwd(G, 0.0, zero_noise, rec_prior, sm.level_h, sm.level_w);
        Tensor drec(rf.out.c, rf.out.h, rf.out.w);
        const double inv_n = 1.0 / rf.out.v.size();
        for (size_t i = 0; i < rf.out.v.size(); ++i) {
          const double d = rf.out.v[i] - real.v[i];
          rec += d * d * inv_n;
          drec.v[i] = cfg.lambda_recon * 2.0 * d * inv_n;
        }
        G.backward(clamp_backward(rf, drec));
      } else {
        // lambda = 0: the reconstruction term contributes no gradient, but
        // the loss is still reported for the log
        GenForward rf = n == n_top
                            ? generate_at_scale_fwd(G, 1.0, stack.zstar, nullptr, sm.level_h, sm.level_w)
                            : generate_at_scale_fwd(G, 0.0, zero_noise, rec_prior, sm.level_h, sm.level_w);
        const double inv_n = 1.0 / rf.out.v.size();
        for (size_t i = 0; i < rf.out.v.size(); ++i) {
          const double d = rf.out.v[i] - real.v[i];
          rec += d * d * inv_n;
        }
      }
      opt_g.step(gp);
      g_loss = adv;
      recon_loss = rec;
    }

    if (!std::isfinite(d_loss) || !std::isfinite(g_loss) || !std::isfinite(recon_loss)) {
      const std::string dump = cfg.checkpoint_dir.empty()
                                   ? "texspect_diverged.json"
                                   : cfg.checkpoint_dir + "/diverged.json";
      detail::dump_diagnostics(dump, n, iter, d_loss, g_loss, recon_loss);
      throw TrainingError("non-finite loss at scale " + std::to_string(n) + " iteration " +
                          std::to_string(iter) + "; diagnostics in " + dump);
    }

    LossRecord rec{n, iter, d_loss, g_loss, recon_loss};
    if (log) log->push_back(rec);
    if (log_stream) {
      nlohmann::json j{{"scale", rec.scale},
                       {"iteration", rec.iteration},
                       {"d_loss", rec.d_loss},
                       {"g_loss", rec.g_loss},
                       {"recon_loss", rec.recon_loss}};
      *log_stream << j.dump() << "\n";
    }
  }
}

/// Coarse-to-fine training of the whole pyramid from a single normal image.
/// Scales are trained sequentially from N down to 0; finished scales freeze.
inline TrainResult train_stack(const Image& normal_image, const TrainConfig& cfg) {
  cfg.validate();
  ImagePyramid pyr = build_pyramid(normal_image, cfg.scale_factor, cfg.min_dim);
  if (cfg.max_scales > 0 && pyr.depth() > cfg.max_scales)
    pyr.levels.resize(cfg.max_scales);

  TrainResult result;
  ModelStack& stack = result.stack;
  stack.scale_factor = cfg.scale_factor;
  stack.min_dim = cfg.min_dim;
  stack.img_channels = normal_image.c;

  std::mt19937_64 rng(cfg.seed);
  const int n_top = pyr.depth() - 1;
  // initialize coarse to fine so parameter draws are reproducible per depth
  for (int n = n_top; n >= 0; --n) {
    ScaleModel sm;
    sm.index = n;
    sm.level_h = pyr.levels[n].h;
    sm.level_w = pyr.levels[n].w;
    sm.generator = GeneratorNet(stack.img_channels, cfg.gen_width);
    sm.discriminator =
        DiscriminatorNet(stack.img_channels, cfg.texture_module, cfg.disc_width, cfg.branch_width);
    sm.generator.init(rng);
    sm.discriminator.init(rng);
    stack.models.insert(stack.models.begin(), std::move(sm));
  }
  for (auto& sm : stack.models) sm.index = static_cast<int>(&sm - stack.models.data());
  stack.zstar = gaussian_noise(stack.img_channels, stack.models[n_top].level_h,
                               stack.models[n_top].level_w, rng);

  std::ofstream log_file;
  if (!cfg.log_path.empty()) {
    log_file.open(cfg.log_path, std::ios::trunc);
    if (!log_file) throw IoError("cannot open training log: " + cfg.log_path);
  }

  std::vector<Image> rec;  // reconstruction cascade over trained scales
  for (int n = n_top; n >= 0; --n) {
    ScaleModel& sm = stack.models[n];
    const Image* rec_prior = nullptr;
    if (n == n_top) {
      sm.sigma = 1.0;
    } else {
      rec_prior = &rec[n + 1];
      const Image up = resample(*rec_prior, sm.level_h, sm.level_w);
      sm.sigma = compute_noise_amplitude(pyr.levels[n], up);
    }
    train_scale(stack, n, pyr.levels[n], rec_prior, cfg, rng, &result.log,
                log_file.is_open() ? &log_file : nullptr);
    rec = reconstruct_cascade(stack, n);
    if (!cfg.checkpoint_dir.empty()) {
      CheckpointManifest meta;
      meta.gen_width = cfg.gen_width;
      meta.disc_width = cfg.disc_width;
      meta.branch_width = cfg.branch_width;
      meta.texture_module = to_string(cfg.texture_module);
      meta.seed = cfg.seed;
      save_checkpoint(stack, meta, cfg.checkpoint_dir);
    }
  }
  return result;
}

}  // namespace texspect
