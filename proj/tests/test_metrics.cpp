#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "texspect/metrics.hpp"

using namespace texspect;

namespace {

// naive counting oracle, quadruple loop over pixels and classes
void count_oracle(const BinaryMask& pred, const BinaryMask& gt, int64_t& tp, int64_t& fp,
                  int64_t& fn, int64_t& tn) {
  tp = fp = fn = tn = 0;
  for (int y = 0; y < pred.h; ++y)
    for (int x = 0; x < pred.w; ++x) {
      const bool p = pred.at(y, x) != 0, g = gt.at(y, x) != 0;
      if (p && g) ++tp;
      else if (p && !g) ++fp;
      else if (!p && g) ++fn;
      else ++tn;
    }
}

BinaryMask random_mask(int h, int w, std::mt19937_64& rng) {
  BinaryMask m(h, w);
  std::bernoulli_distribution bit(0.4);
  for (auto& v : m.v) v = bit(rng) ? 1 : 0;
  return m;
}

}  // namespace

TEST_CASE("identical nonempty masks score IoU 1 and accuracy 1") {
  BinaryMask m(4, 4);
  m.at(1, 1) = m.at(2, 2) = 1;
  CHECK(compute_iou(m, m) == 1.0);
  CHECK(compute_pixel_acc(m, m) == 1.0);
}

TEST_CASE("disjoint nonempty masks score IoU 0") {
  BinaryMask a(4, 4), b(4, 4);
  a.at(0, 0) = 1;
  b.at(3, 3) = 1;
  CHECK(compute_iou(a, b) == 0.0);
}

TEST_CASE("complement prediction scores accuracy 0") {
  BinaryMask gt(4, 4);
  gt.at(1, 2) = 1;
  BinaryMask pred(4, 4);
  for (size_t i = 0; i < pred.v.size(); ++i) pred.v[i] = gt.v[i] ? 0 : 1;
  CHECK(compute_pixel_acc(pred, gt) == 0.0);
}

TEST_CASE("2x2 worked example: TP=FP=FN=TN=1") {
  BinaryMask pred(2, 2), gt(2, 2);
  pred.at(0, 0) = 1;  // TP
  gt.at(0, 0) = 1;
  pred.at(0, 1) = 1;  // FP
  gt.at(1, 0) = 1;    // FN
  CHECK(compute_iou(pred, gt) == Catch::Approx(1.0 / 3.0));
  CHECK(compute_pixel_acc(pred, gt) == Catch::Approx(0.5));
}

TEST_CASE("both masks empty is the perfect prediction") {
  BinaryMask a(3, 3), b(3, 3);
  CHECK(compute_iou(a, b) == 1.0);
  CHECK(compute_pixel_acc(a, b) == 1.0);
}

TEST_CASE("shape mismatch is rejected") {
  CHECK_THROWS_AS(compute_iou(BinaryMask(2, 2), BinaryMask(3, 3)), ParameterError);
  CHECK_THROWS_AS(compute_pixel_acc(BinaryMask(2, 2), BinaryMask(3, 3)), ParameterError);
}

TEST_CASE("metrics match the counting oracle on 1000 random 8x8 pairs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    BinaryMask pred = random_mask(8, 8, rng);
    BinaryMask gt = random_mask(8, 8, rng);
    int64_t tp, fp, fn, tn;
    count_oracle(pred, gt, tp, fp, fn, tn);
    const double expect_iou = (tp + fp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp + fn);
    const double expect_acc = static_cast<double>(tp + tn) / 64.0;
    CHECK(compute_iou(pred, gt) == expect_iou);
    CHECK(compute_pixel_acc(pred, gt) == expect_acc);
  }
}

TEST_CASE("report aggregates are the arithmetic mean over evaluated images") {
  MetricsReport rep;
  rep.per_image = {{"a.png", 0.5, 0.9, false, ""},
                   {"b.png", 0.7, 0.8, false, ""},
                   {"c.png", 0.0, 0.0, true, "no matching mask"}};
  finalize_report(rep);
  CHECK(rep.evaluated == 2);
  CHECK(rep.skipped == 1);
  CHECK(rep.mean_iou == Catch::Approx(0.6));
  CHECK(rep.mean_pixel_acc == Catch::Approx(0.85));
}

TEST_CASE("report writing emits one record per image plus a summary") {
  MetricsReport rep;
  rep.per_image = {{"a.png", 1.0, 1.0, false, ""}, {"b.png", 0.0, 0.0, true, "unreadable"}};
  finalize_report(rep);
  const auto path =
      (std::filesystem::temp_directory_path() / "texspect_report_test.jsonl").string();
  write_report(rep, path);

  std::ifstream in(path);
  std::vector<nlohmann::json> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0]["record"] == "image");
  CHECK(lines[1]["skipped"] == true);
  CHECK(lines[2]["record"] == "summary");
  CHECK(lines[2]["mean_iou"].get<double>() == Catch::Approx(1.0));
}
