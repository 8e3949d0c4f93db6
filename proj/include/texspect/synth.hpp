#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "texspect/image.hpp"

namespace texspect {

enum class TextureFamily { Stripes, Checker, Noise };
enum class DefectShape { Rect, Blob };

struct SynthSpec {
  TextureFamily family = TextureFamily::Stripes;
  int size = 64;
  DefectShape defect_shape = DefectShape::Rect;
  int defect_extent = 10;        // side length (rect) or radius-ish scale (blob)
  double defect_offset = 0.0;    // intensity offset inside the defect; 0 = no defect
  uint64_t seed = 0;
};

inline TextureFamily texture_family_from_string(const std::string& s) {
  if (s == "stripes") return TextureFamily::Stripes;
  if (s == "checker") return TextureFamily::Checker;
  if (s == "noise") return TextureFamily::Noise;
  throw ParameterError("unknown texture family: " + s);
}

inline DefectShape defect_shape_from_string(const std::string& s) {
  if (s == "rect") return DefectShape::Rect;
  if (s == "blob") return DefectShape::Blob;
  throw ParameterError("unknown defect shape: " + s);
}

namespace detail {

// Smooth value noise: bilinear interpolation of a coarse random lattice.
inline Image value_noise(int size, std::mt19937_64& rng) {
  const int cells = std::max(2, size / 8);
  Image lattice(1, cells, cells);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  for (double& v : lattice.v) v = dist(rng);
  return resample(lattice, size, size);
}

inline Image base_texture(const SynthSpec& spec, std::mt19937_64& rng) {
  Image img(1, spec.size, spec.size);
  switch (spec.family) {
    case TextureFamily::Stripes: {
      const double period = 8.0;
      for (int y = 0; y < spec.size; ++y)
        for (int x = 0; x < spec.size; ++x)
          img.at(0, y, x) = 0.7 * std::sin(2.0 * M_PI * y / period);
      break;
    }
    case TextureFamily::Checker: {
      const int cell = 8;
      for (int y = 0; y < spec.size; ++y)
        for (int x = 0; x < spec.size; ++x)
          img.at(0, y, x) = ((y / cell + x / cell) % 2 == 0) ? 0.6 : -0.6;
      break;
    }
    case TextureFamily::Noise:
      img = value_noise(spec.size, rng);
      break;
  }
  // Mild pixel noise so the texture is not exactly periodic.
  std::normal_distribution<double> jitter(0.0, 0.03);
  for (double& v : img.v) v = std::clamp(v + jitter(rng), -1.0, 1.0);
  return img;
}

}  // namespace detail

/// Deterministic given the seed. The mask marks exactly the injected pixels;
/// the intensity offset is applied only inside the mask.
inline std::pair<Image, BinaryMask> synth_texture_sample(const SynthSpec& spec) {
  if (spec.size < 4) throw ParameterError("synth: size must be >= 4");
  if (spec.defect_extent > spec.size) throw ParameterError("synth: defect larger than image");
  std::mt19937_64 rng(spec.seed);
  Image img = detail::base_texture(spec, rng);
  BinaryMask mask(spec.size, spec.size);

  if (spec.defect_offset != 0.0) {
    const int e = spec.defect_extent;
    std::uniform_int_distribution<int> pos(0, spec.size - e);
    const int y0 = pos(rng), x0 = pos(rng);
    switch (spec.defect_shape) {
      case DefectShape::Rect:
        for (int y = y0; y < y0 + e; ++y)
          for (int x = x0; x < x0 + e; ++x) mask.at(y, x) = 1;
        break;
      case DefectShape::Blob: {
        // Ellipse with jittered radii inside the e x e box.
        const double cy = y0 + e / 2.0, cx = x0 + e / 2.0;
        std::uniform_real_distribution<double> rdist(0.75, 1.0);
        const double ry = std::max(1.0, e / 2.0 * rdist(rng));
        const double rx = std::max(1.0, e / 2.0 * rdist(rng));
        for (int y = 0; y < spec.size; ++y)
          for (int x = 0; x < spec.size; ++x) {
            const double dy = (y + 0.5 - cy) / ry, dx = (x + 0.5 - cx) / rx;
            if (dy * dy + dx * dx <= 1.0) mask.at(y, x) = 1;
          }
        break;
      }
    }
    const double area = static_cast<double>(spec.size) * spec.size;
    const double frac = mask.count() / area;
    if (frac < 0.01 || frac > 0.25)
      throw ParameterError("synth: defect area must cover 1%-25% of the image");
    for (int y = 0; y < spec.size; ++y)
      for (int x = 0; x < spec.size; ++x)
        if (mask.at(y, x))
          img.at(0, y, x) = std::clamp(img.at(0, y, x) + spec.defect_offset, -1.0, 1.0);
  }
  return {img, mask};
}

}  // namespace texspect
