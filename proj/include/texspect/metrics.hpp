#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "texspect/image.hpp"
#include "texspect/inspection.hpp"

namespace texspect {

/// Defect-class IoU. Both masks empty counts as a perfect prediction (1.0).
inline double compute_iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.h != gt.h || pred.w != gt.w) throw ParameterError("iou: shape mismatch");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    const bool p = pred.v[i] != 0, g = gt.v[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double compute_pixel_acc(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.h != gt.h || pred.w != gt.w) throw ParameterError("pixel acc: shape mismatch");
  int64_t correct = 0;
  for (size_t i = 0; i < pred.v.size(); ++i)
    correct += ((pred.v[i] != 0) == (gt.v[i] != 0)) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pred.v.size());
}

struct ImageMetrics {
  std::string name;
  double iou = 0.0;
  double pixel_acc = 0.0;
  bool skipped = false;
  std::string skip_reason;
};

struct MetricsReport {
  std::vector<ImageMetrics> per_image;
  double mean_iou = 0.0;
  double mean_pixel_acc = 0.0;
  int evaluated = 0;
  int skipped = 0;
};

inline void finalize_report(MetricsReport& rep) {
  rep.evaluated = 0;
  rep.skipped = 0;
  double iou = 0.0, acc = 0.0;
  for (const auto& im : rep.per_image) {
    if (im.skipped) {
      ++rep.skipped;
      continue;
    }
    ++rep.evaluated;
    iou += im.iou;
    acc += im.pixel_acc;
  }
  rep.mean_iou = rep.evaluated ? iou / rep.evaluated : 0.0;
  rep.mean_pixel_acc = rep.evaluated ? acc / rep.evaluated : 0.0;
}

/// Line-delimited records, one per image, then a summary row.
inline void write_report(const MetricsReport& rep, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path);
  for (const auto& im : rep.per_image) {
    nlohmann::json j{{"record", "image"}, {"name", im.name}};
    if (im.skipped) {
      j["skipped"] = true;
      j["reason"] = im.skip_reason;
    } else {
      j["iou"] = im.iou;
      j["pixel_acc"] = im.pixel_acc;
    }
    out << j.dump() << "\n";
  }
  nlohmann::json s{{"record", "summary"},
                   {"evaluated", rep.evaluated},
                   {"skipped", rep.skipped},
                   {"mean_iou", rep.mean_iou},
                   {"mean_pixel_acc", rep.mean_pixel_acc}};
  out << s.dump() << "\n";
}

namespace detail {

inline bool is_raster(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ".png" || e == ".jpg" || e == ".jpeg" || e == ".bmp";
}

}  // namespace detail

/// Pair images and masks by filename stem, inspect each image, score both
/// metrics. Unpaired or unreadable images are listed as skipped, non-fatal.
inline MetricsReport evaluate_dataset(ModelStack& stack, const std::string& image_dir,
                                      const std::string& mask_dir,
                                      const InspectOptions& opt = {}) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(image_dir)) throw IoError("not a directory: " + image_dir);
  if (!fs::is_directory(mask_dir)) throw IoError("not a directory: " + mask_dir);

  std::map<std::string, fs::path> masks;
  for (const auto& e : fs::directory_iterator(mask_dir))
    if (e.is_regular_file() && detail::is_raster(e.path())) masks[e.path().stem().string()] = e.path();

  std::vector<fs::path> images;
  for (const auto& e : fs::directory_iterator(image_dir))
    if (e.is_regular_file() && detail::is_raster(e.path())) images.push_back(e.path());
  std::sort(images.begin(), images.end());

  const int res_h = stack.models[0].level_h, res_w = stack.models[0].level_w;
  MetricsReport rep;
  for (const auto& p : images) {
    ImageMetrics im;
    im.name = p.filename().string();
    auto mit = masks.find(p.stem().string());
    if (mit == masks.end()) {
      im.skipped = true;
      im.skip_reason = "no matching mask";
      rep.per_image.push_back(im);
      continue;
    }
    try {
      Image img = load_image_native(p.string());
      BinaryMask gt = resize_mask(load_mask(mit->second.string()), res_h, res_w);
      InspectionResult r = inspect(stack, img, opt);
      im.iou = compute_iou(r.mask, gt);
      im.pixel_acc = compute_pixel_acc(r.mask, gt);
    } catch (const std::exception& e) {
      im.skipped = true;
      im.skip_reason = e.what();
    }
    rep.per_image.push_back(im);
  }
  finalize_report(rep);
  return rep;
}

}  // namespace texspect
