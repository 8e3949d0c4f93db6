#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace texspect {

/// Dense CHW grid of doubles. Channel planes are contiguous, row-major.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<size_t>(c_) * h_ * w_, fill) {}

  size_t size() const { return v.size(); }
  int plane() const { return h * w; }

  double& at(int ch, int y, int x) { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }
  double at(int ch, int y, int x) const { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }

  bool same_shape(const Tensor& o) const { return c == o.c && h == o.h && w == o.w; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }

  Tensor& operator+=(const Tensor& o) {
    assert(same_shape(o));
    for (size_t i = 0; i < v.size(); ++i) v[i] += o.v[i];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& x : v) x *= s;
    return *this;
  }

  void clamp(double lo, double hi) {
    for (double& x : v) x = x < lo ? lo : (x > hi ? hi : x);
  }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline Tensor gaussian_noise(int c, int h, int w, std::mt19937_64& rng) {
  Tensor t(c, h, w);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& x : t.v) x = dist(rng);
  return t;
}

}  // namespace texspect
