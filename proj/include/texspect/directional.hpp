#pragma once

#include <array>
#include <map>
#include <mutex>
#include <string>

#include "texspect/image.hpp"
#include "texspect/tensor.hpp"

namespace texspect {

/// Fixed branch order. Each map ramps linearly from 1 to 0 toward the named
/// edge or corner: the "left" map is 0 on the left edge and 1 on the right.
enum class Direction {
  Top = 0,
  Bottom,
  Left,
  Right,
  TopLeft,
  BottomLeft,
  TopRight,
  BottomRight,
};

inline constexpr int kDirectionCount = 8;

inline constexpr std::array<const char*, kDirectionCount> kDirectionNames = {
    "top", "bottom", "left", "right", "top-left", "bottom-left", "top-right", "bottom-right"};

inline Direction direction_from_string(const std::string& s) {
  for (int i = 0; i < kDirectionCount; ++i)
    if (s == kDirectionNames[i]) return static_cast<Direction>(i);
  throw ParameterError("unknown direction: " + s);
}

/// T[i,j] = 1 - (p - p_min) / (p_max - p_min) with p the signed projection of
/// (i, j) onto the direction's offset. Degenerate extent (p_max == p_min)
/// yields the constant 1.
inline Tensor make_directional_map(Direction dir, int height, int width) {
  if (height < 1 || width < 1) throw ParameterError("directional map: size must be >= 1");
  int di = 0, dj = 0;
  switch (dir) {
    case Direction::Top:         di = -1; dj = 0;  break;
    case Direction::Bottom:      di = 1;  dj = 0;  break;
    case Direction::Left:        di = 0;  dj = -1; break;
    case Direction::Right:       di = 0;  dj = 1;  break;
    case Direction::TopLeft:     di = -1; dj = -1; break;
    case Direction::BottomLeft:  di = 1;  dj = -1; break;
    case Direction::TopRight:    di = -1; dj = 1;  break;
    case Direction::BottomRight: di = 1;  dj = 1;  break;
  }
  const double p00 = 0.0;
  const double p_end = di * (height - 1.0) + dj * (width - 1.0);
  const double p_min = std::min({p00, di * (height - 1.0), dj * (width - 1.0), p_end});
  const double p_max = std::max({p00, di * (height - 1.0), dj * (width - 1.0), p_end});
  Tensor t(1, height, width, 1.0);
  if (p_max > p_min) {
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j) {
        const double p = di * static_cast<double>(i) + dj * static_cast<double>(j);
        t.at(0, i, j) = 1.0 - (p - p_min) / (p_max - p_min);
      }
  }
  return t;
}

struct DirectionalMapSet {
  std::array<Tensor, kDirectionCount> maps;
  int height = 0, width = 0;
};

inline DirectionalMapSet make_directional_set(int height, int width) {
  DirectionalMapSet set;
  set.height = height;
  set.width = width;
  for (int i = 0; i < kDirectionCount; ++i)
    set.maps[i] = make_directional_map(static_cast<Direction>(i), height, width);
  return set;
}

/// Per-size cache; maps carry no trainable state.
inline const DirectionalMapSet& cached_directional_set(int height, int width) {
  static std::map<std::pair<int, int>, DirectionalMapSet> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(height, width);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_directional_set(height, width)).first;
  return it->second;
}

}  // namespace texspect
