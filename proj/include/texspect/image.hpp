#pragma once

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "texspect/tensor.hpp"

namespace texspect {

/// Images are Tensors with 1 or 3 channels and values in [-1, 1].
using Image = Tensor;

/// Binary mask, row-major, true = defect.
struct BinaryMask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;

  BinaryMask() = default;
  BinaryMask(int h_, int w_, uint8_t fill = 0)
      : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

  uint8_t& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t b : v) n += b ? 1 : 0;
    return n;
  }
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Bilinear resample with the corner-aligned convention: output sample t maps
/// to source coordinate t*(S-1)/(T-1). Values are clamped back to [-1, 1].
/// Resampling to the identical size is the identity.
inline Image resample(const Image& img, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) throw ParameterError("resample: target size must be >= 1");
  if (target_h == img.h && target_w == img.w) return img;
  Image out(img.c, target_h, target_w);
  const double sy = target_h > 1 ? static_cast<double>(img.h - 1) / (target_h - 1) : 0.0;
  const double sx = target_w > 1 ? static_cast<double>(img.w - 1) / (target_w - 1) : 0.0;
  for (int ch = 0; ch < img.c; ++ch) {
    for (int y = 0; y < target_h; ++y) {
      const double fy = y * sy;
      const int y0 = static_cast<int>(fy);
      const int y1 = std::min(y0 + 1, img.h - 1);
      const double wy = fy - y0;
      for (int x = 0; x < target_w; ++x) {
        const double fx = x * sx;
        const int x0 = static_cast<int>(fx);
        const int x1 = std::min(x0 + 1, img.w - 1);
        const double wx = fx - x0;
        const double top = img.at(ch, y0, x0) * (1 - wx) + img.at(ch, y0, x1) * wx;
        const double bot = img.at(ch, y1, x0) * (1 - wx) + img.at(ch, y1, x1) * wx;
        double val = top * (1 - wy) + bot * wy;
        out.at(ch, y, x) = val < -1.0 ? -1.0 : (val > 1.0 ? 1.0 : val);
      }
    }
  }
  return out;
}

struct ImagePyramid {
  std::vector<Image> levels;  // index 0 = finest
  double scale_factor = 0.75;
  int min_dim = 24;

  int depth() const { return static_cast<int>(levels.size()); }
  int coarsest() const { return depth() - 1; }
};

/// Level sizes are computed geometrically from the original
/// (round(size0 * r^n)) rather than chained, so rounding does not drift.
inline std::vector<std::pair<int, int>> pyramid_sizes(int h0, int w0, double r, int min_dim) {
  if (r <= 0.0 || r >= 1.0) throw ParameterError("pyramid: scale factor must be in (0,1)");
  if (min_dim < 4) throw ParameterError("pyramid: min_dim must be >= 4");
  std::vector<std::pair<int, int>> sizes;
  sizes.emplace_back(h0, w0);  // level 0 is always present
  double f = 1.0;
  for (;;) {
    f *= r;
    const int h = static_cast<int>(std::lround(h0 * f));
    const int w = static_cast<int>(std::lround(w0 * f));
    if (std::min(h, w) < min_dim) break;
    sizes.emplace_back(h, w);
  }
  return sizes;
}

inline ImagePyramid build_pyramid(const Image& image, double scale_factor, int min_dim) {
  ImagePyramid pyr;
  pyr.scale_factor = scale_factor;
  pyr.min_dim = min_dim;
  const auto sizes = pyramid_sizes(image.h, image.w, scale_factor, min_dim);
  pyr.levels.reserve(sizes.size());
  pyr.levels.push_back(image);
  for (size_t n = 1; n < sizes.size(); ++n)
    pyr.levels.push_back(resample(image, sizes[n].first, sizes[n].second));
  return pyr;
}

namespace detail {
inline Image from_mat(const cv::Mat& m) {
  // OpenCV loads BGR; internal order is RGB.
  const int c = m.channels();
  if (c != 1 && c != 3) throw FormatError("unsupported channel count: " + std::to_string(c));
  Image img(c, m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        const int src = c == 3 ? (2 - ch) : 0;
        img.at(ch, y, x) = row[x * c + src] / 255.0 * 2.0 - 1.0;
      }
    }
  }
  return img;
}

inline cv::Mat to_mat(const Image& img) {
  cv::Mat m(img.h, img.w, img.c == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < img.h; ++y) {
    uint8_t* row = m.ptr<uint8_t>(y);
    for (int x = 0; x < img.w; ++x) {
      for (int ch = 0; ch < img.c; ++ch) {
        const int dst = img.c == 3 ? (2 - ch) : 0;
        double val = (img.at(ch, y, x) + 1.0) / 2.0 * 255.0;
        val = val < 0 ? 0 : (val > 255 ? 255 : val);
        row[x * img.c + dst] = static_cast<uint8_t>(std::lround(val));
      }
    }
  }
  return m;
}
}  // namespace detail

/// Decode a raster image, resize to target_size x target_size, map [0,255]
/// linearly to [-1,1].
inline Image load_image(const std::string& path, int target_size) {
  if (target_size < 1) throw ParameterError("load_image: target_size must be >= 1");
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot read image: " + path);
  if (m.depth() != CV_8U) m.convertTo(m, CV_8U);
  if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  Image img = detail::from_mat(m);
  return resample(img, target_size, target_size);
}

/// Load at native resolution, no resize.
inline Image load_image_native(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
  if (m.empty()) throw IoError("cannot read image: " + path);
  if (m.depth() != CV_8U) m.convertTo(m, CV_8U);
  if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
  return detail::from_mat(m);
}

inline void save_image(const Image& img, const std::string& path) {
  if (!cv::imwrite(path, detail::to_mat(img))) throw IoError("cannot write image: " + path);
}

/// Masks are single-channel PNG, 0 = normal, 255 = defect.
inline BinaryMask load_mask(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw IoError("cannot read mask: " + path);
  BinaryMask mask(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) mask.at(y, x) = m.at<uint8_t>(y, x) >= 128 ? 1 : 0;
  return mask;
}

inline void save_mask(const BinaryMask& mask, const std::string& path) {
  cv::Mat m(mask.h, mask.w, CV_8UC1);
  for (int y = 0; y < mask.h; ++y)
    for (int x = 0; x < mask.w; ++x) m.at<uint8_t>(y, x) = mask.at(y, x) ? 255 : 0;
  if (!cv::imwrite(path, m)) throw IoError("cannot write mask: " + path);
}

/// Nearest-neighbour mask resize, for pairing masks with resized images.
inline BinaryMask resize_mask(const BinaryMask& mask, int target_h, int target_w) {
  if (mask.h == target_h && mask.w == target_w) return mask;
  BinaryMask out(target_h, target_w);
  for (int y = 0; y < target_h; ++y) {
    int sy = std::min(static_cast<int>(static_cast<int64_t>(y) * mask.h / target_h), mask.h - 1);
    for (int x = 0; x < target_w; ++x) {
      int sx = std::min(static_cast<int>(static_cast<int64_t>(x) * mask.w / target_w), mask.w - 1);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

/// Write a single-channel map as 16-bit gray PNG, min-max normalized.
inline void save_heatmap(const Tensor& map, const std::string& path) {
  double lo = map.v.empty() ? 0.0 : map.v[0], hi = lo;
  for (double x : map.v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  cv::Mat m(map.h, map.w, CV_16UC1);
  for (int y = 0; y < map.h; ++y)
    for (int x = 0; x < map.w; ++x)
      m.at<uint16_t>(y, x) = static_cast<uint16_t>(std::lround((map.at(0, y, x) - lo) / span * 65535.0));
  if (!cv::imwrite(path, m)) throw IoError("cannot write heatmap: " + path);
}

}  // namespace texspect
