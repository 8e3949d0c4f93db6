#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "texspect/checkpoint.hpp"
#include "texspect/model.hpp"

namespace texspect {

/// Sign convention for the per-pixel entropy of a distinguish map.
/// Saliency (default) is -M ln M, so uncertain regions score high; literal is
/// the signed M ln M variant. Both are thresholded sign-consistently.
enum class EntropySign { Saliency, Literal };

inline EntropySign entropy_sign_from_string(const std::string& s) {
  if (s == "saliency") return EntropySign::Saliency;
  if (s == "literal") return EntropySign::Literal;
  throw ParameterError("unknown entropy sign: " + s);
}

inline constexpr double kEntropyEps = 1e-12;

inline Tensor entropy_map(const Tensor& m, EntropySign mode = EntropySign::Saliency) {
  Tensor h(m.c, m.h, m.w);
  for (size_t i = 0; i < m.v.size(); ++i) {
    const double x = std::clamp(m.v[i], kEntropyEps, 1.0);
    const double e = x * std::log(x);
    h.v[i] = mode == EntropySign::Saliency ? -e : e;
  }
  return h;
}

/// Uniform fusion weights 1/count, with the last weight compensated so the
/// running sum is exactly 1.0 in double arithmetic.
inline std::vector<double> fusion_weights(size_t count) {
  if (count == 0) throw ParameterError("fuse: empty map list");
  std::vector<double> w(count, 1.0 / static_cast<double>(count));
  double partial = 0.0;
  for (size_t i = 0; i + 1 < count; ++i) partial += w[i];
  w[count - 1] = 1.0 - partial;
  return w;
}

/// R = sum alpha_n H_n with uniform alpha_n = 1/(N+1); coarse maps are
/// bilinearly resampled to the target size first.
inline Tensor fuse_maps(const std::vector<Tensor>& entropy_maps, int target_h, int target_w) {
  const std::vector<double> alphas = fusion_weights(entropy_maps.size());
  Tensor fused(1, target_h, target_w);
  for (size_t n = 0; n < entropy_maps.size(); ++n) {
    Tensor up = resample(entropy_maps[n], target_h, target_w);
    for (size_t i = 0; i < fused.v.size(); ++i) fused.v[i] += alphas[n] * up.v[i];
  }
  return fused;
}

struct ThresholdPolicy {
  enum class Kind { Otsu, Percentile } kind = Kind::Otsu;
  double percentile = 99.0;

  static ThresholdPolicy otsu() { return {}; }
  static ThresholdPolicy top_percentile(double p) {
    if (p < 0.0 || p > 100.0) throw ParameterError("threshold: percentile outside [0,100]");
    return {Kind::Percentile, p};
  }
  /// "otsu" or "pXX" (mark the top (100-XX)% of pixels).
  static ThresholdPolicy parse(const std::string& s) {
    if (s == "otsu") return otsu();
    if (s.size() > 1 && s[0] == 'p') {
      size_t pos = 0;
      double p = std::stod(s.substr(1), &pos);
      if (pos == s.size() - 1) return top_percentile(p);
    }
    throw ParameterError("unknown threshold policy: " + s);
  }
};

namespace detail {

// 256-bin Otsu over min-max normalized values. Constant input marks nothing.
inline BinaryMask otsu_mask(const Tensor& r, double* cut_out) {
  BinaryMask mask(r.h, r.w);
  double lo = r.v[0], hi = r.v[0];
  for (double x : r.v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (cut_out) *cut_out = hi;
  if (hi <= lo) return mask;  // constant map, all background

  std::array<int64_t, 256> hist{};
  std::vector<int> bins(r.v.size());
  for (size_t i = 0; i < r.v.size(); ++i) {
    int b = static_cast<int>((r.v[i] - lo) / (hi - lo) * 256.0);
    b = std::min(b, 255);
    bins[i] = b;
    ++hist[b];
  }
  const double total = static_cast<double>(r.v.size());
  double sum_all = 0.0;
  for (int b = 0; b < 256; ++b) sum_all += b * static_cast<double>(hist[b]);

  int best_t = 0;
  double best_var = -1.0, w0 = 0.0, sum0 = 0.0;
  for (int t = 0; t < 255; ++t) {
    w0 += static_cast<double>(hist[t]);
    sum0 += t * static_cast<double>(hist[t]);
    const double w1 = total - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  for (size_t i = 0; i < r.v.size(); ++i)
    if (bins[i] > best_t) mask.v[i] = 1;
  if (cut_out) *cut_out = lo + (best_t + 1) / 256.0 * (hi - lo);
  return mask;
}

// Mark the top (100-p)% of pixels, ties broken by scan order.
inline BinaryMask percentile_mask(const Tensor& r, double p, double* cut_out) {
  BinaryMask mask(r.h, r.w);
  const auto total = static_cast<int64_t>(r.v.size());
  const auto k = static_cast<int64_t>(std::llround(total * (100.0 - p) / 100.0));
  if (cut_out) *cut_out = std::numeric_limits<double>::infinity();
  if (k <= 0) return mask;
  std::vector<int64_t> order(r.v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int64_t a, int64_t b) { return r.v[a] > r.v[b]; });
  for (int64_t i = 0; i < k; ++i) mask.v[order[i]] = 1;
  if (cut_out) *cut_out = r.v[order[k - 1]];
  return mask;
}

}  // namespace detail

inline BinaryMask threshold_map(const Tensor& r, const ThresholdPolicy& policy,
                                double* cut_out = nullptr) {
  if (!r.all_finite()) throw ParameterError("threshold: map has non-finite values");
  if (policy.kind == ThresholdPolicy::Kind::Otsu) return detail::otsu_mask(r, cut_out);
  return detail::percentile_mask(r, policy.percentile, cut_out);
}

struct InspectOptions {
  EntropySign entropy_sign = EntropySign::Saliency;
  ThresholdPolicy threshold = ThresholdPolicy::otsu();
};

struct InspectionResult {
  Tensor fused;                        // R at full test resolution
  std::vector<Tensor> entropy_maps;    // H_0..H_N at native level sizes
  std::vector<Tensor> distinguish;     // M_0..M_N
  BinaryMask mask;
  double threshold_value = 0.0;
  std::vector<double> alphas;
  EntropySign entropy_sign = EntropySign::Saliency;
};

/// Test-time pipeline: pyramid the test image with the training scale
/// factor, run each scale's discriminator on its level (generators are not
/// involved), take per-pixel entropy, fuse, threshold.
inline InspectionResult inspect(ModelStack& stack, const Image& test_image,
                                const InspectOptions& opt = {}) {
  if (stack.models.empty()) throw CheckpointError("inspect: empty model stack");
  if (test_image.c != stack.img_channels)
    throw ParameterError("inspect: channel count differs from the training image");

  const ScaleModel& finest = stack.models[0];
  Image img = resample(test_image, finest.level_h, finest.level_w);
  ImagePyramid pyr = build_pyramid(img, stack.scale_factor, stack.min_dim);
  if (pyr.depth() < stack.depth())
    throw CheckpointError("inspect: pyramid depth mismatch with checkpoint");
  pyr.levels.resize(stack.depth());
  for (int n = 0; n < stack.depth(); ++n)
    if (pyr.levels[n].h != stack.models[n].level_h || pyr.levels[n].w != stack.models[n].level_w)
      throw CheckpointError("inspect: pyramid level sizes disagree with checkpoint");

  InspectionResult res;
  res.entropy_sign = opt.entropy_sign;
  res.distinguish.resize(stack.depth());
  res.entropy_maps.resize(stack.depth());
  for (int n = 0; n < stack.depth(); ++n) {
    res.distinguish[n] = stack.models[n].discriminator.discriminate(pyr.levels[n]);
    res.entropy_maps[n] = entropy_map(res.distinguish[n], opt.entropy_sign);
  }
  res.fused = fuse_maps(res.entropy_maps, finest.level_h, finest.level_w);
  res.alphas = fusion_weights(static_cast<size_t>(stack.depth()));

  if (opt.entropy_sign == EntropySign::Literal) {
    // literal maps score anomalies low; mirror so thresholding marks them
    Tensor flipped = res.fused;
    for (double& v : flipped.v) v = -v;
    res.mask = threshold_map(flipped, opt.threshold, &res.threshold_value);
    res.threshold_value = -res.threshold_value;
  } else {
    res.mask = threshold_map(res.fused, opt.threshold, &res.threshold_value);
  }
  return res;
}

}  // namespace texspect
