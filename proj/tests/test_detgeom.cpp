#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "herdmetric/detgeom.hpp"
#include "herdmetric/error.hpp"
#include "herdmetric/rng.hpp"

using namespace herdmetric;
using namespace herdmetric::detgeom;

TEST_CASE("iou hand values and properties") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == doctest::Approx(1.0));
  CHECK(iou({0, 0, 1, 1}, {5, 5, 6, 6}) == doctest::Approx(0.0));
  // areas 4 and 4, intersection 1, union 7
  CHECK(iou({0, 0, 2, 2}, {1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK_THROWS_AS(iou({0, 0, 0, 2}, {0, 0, 1, 1}), ValidationError);

  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const double x1 = rng.uniform(-5, 5), y1 = rng.uniform(-5, 5);
    const Box a{x1, y1, x1 + rng.uniform(0.1, 4), y1 + rng.uniform(0.1, 4)};
    const double x2 = rng.uniform(-5, 5), y2 = rng.uniform(-5, 5);
    const Box b{x2, y2, x2 + rng.uniform(0.1, 4), y2 + rng.uniform(0.1, 4)};
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(iou(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("nms keeps the strongest of overlapping boxes") {
  const std::vector<Detection> single = {{{0, 0, 4, 4}, 0.7}};
  CHECK(nms(single, 0.28).size() == 1);

  const std::vector<Detection> twins = {{{0, 0, 4, 4}, 0.9}, {{0, 0, 4, 4}, 0.8}};
  const auto kept = nms(twins, 0.28);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].confidence == 0.9);
}

TEST_CASE("nms greedy chain keeps the two ends") {
  // A overlaps B, B overlaps C, A and C disjoint.
  const std::vector<Detection> dets = {{{0, 0, 10, 10}, 0.9},
                                       {{5, 0, 15, 10}, 0.8},
                                       {{10.5, 0, 20.5, 10}, 0.7}};
  CHECK(iou(dets[0].box, dets[1].box) > 0.28);
  CHECK(iou(dets[1].box, dets[2].box) > 0.28);
  CHECK(iou(dets[0].box, dets[2].box) == doctest::Approx(0.0));
  const auto kept = nms(dets, 0.28);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].confidence == 0.9);
  CHECK(kept[1].confidence == 0.7);
}

TEST_CASE("nms output is a subset, non-overlapping, and idempotent") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<Detection> dets;
    for (int i = 0; i < 20; ++i) {
      const double x = rng.uniform(0, 20), y = rng.uniform(0, 20);
      dets.push_back({{x, y, x + rng.uniform(1, 6), y + rng.uniform(1, 6)}, rng.uniform()});
    }
    const double thresh = rng.uniform(0.1, 0.6);
    const auto kept = nms(dets, thresh);
    CHECK(kept.size() <= dets.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        CHECK(iou(kept[i].box, kept[j].box) <= thresh);
    const auto again = nms(kept, thresh);
    CHECK(again.size() == kept.size());
  }
}

TEST_CASE("offset encode/decode hand values and inverse round trip") {
  const Anchor anchor{{0, 0, 10, 10}};
  const Offsets zero = encode_offsets(anchor.box, anchor);
  for (double v : zero) CHECK(v == doctest::Approx(0.0));
  CHECK(decode_offsets({0, 0, 0, 0}, anchor).x2 == doctest::Approx(10.0));

  const Offsets t = encode_offsets({1, 2, 11, 12}, anchor);
  CHECK(t[0] == doctest::Approx(0.1));
  CHECK(t[1] == doctest::Approx(0.2));
  CHECK(t[2] == doctest::Approx(0.1));
  CHECK(t[3] == doctest::Approx(0.2));
  const Box back = decode_offsets({0.1, 0.2, 0.1, 0.2}, anchor);
  CHECK(back.x1 == doctest::Approx(1.0));
  CHECK(back.y2 == doctest::Approx(12.0));

  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double ax = rng.uniform(-10, 10), ay = rng.uniform(-10, 10);
    const Anchor a{{ax, ay, ax + rng.uniform(1, 8), ay + rng.uniform(1, 8)}};
    const double gx = rng.uniform(-10, 10), gy = rng.uniform(-10, 10);
    const Box gt{gx, gy, gx + rng.uniform(1, 8), gy + rng.uniform(1, 8)};
    const Box rt = decode_offsets(encode_offsets(gt, a), a);
    CHECK(std::abs(rt.x1 - gt.x1) <= 1e-12);
    CHECK(std::abs(rt.y1 - gt.y1) <= 1e-12);
    CHECK(std::abs(rt.x2 - gt.x2) <= 1e-12);
    CHECK(std::abs(rt.y2 - gt.y2) <= 1e-12);
  }
  CHECK_THROWS_AS(decode_offsets({10, 0, -10, 0}, anchor), ValidationError);
}

TEST_CASE("focal loss hand values and cross-entropy reduction") {
  FocalParams fp{2.0, 0.25, 1.0};
  // 0.25 * (1-0.9)^2 * -log(0.9)
  CHECK(focal_loss(0.9, 1, fp) == doctest::Approx(2.6340129e-4).epsilon(1e-5));
  // easy example decays to nothing
  CHECK(focal_loss(1.0 - 1e-9, 1, fp) <= 1e-10);
  // gamma=0 with alpha_t=1 is plain cross-entropy, to 1e-12
  const FocalParams ce_pos{0.0, 1.0, 1.0};
  const FocalParams ce_neg{0.0, 0.0, 1.0};
  for (int i = 1; i <= 1000; ++i) {
    const double p = i / 1001.0;
    CHECK(std::abs(focal_loss(p, 1, ce_pos) + std::log(p)) <= 1e-12);
    CHECK(std::abs(focal_loss(p, -1, ce_neg) + std::log(1 - p)) <= 1e-12);
  }
  // clamped rather than infinite at p in {0,1}
  CHECK(std::isfinite(focal_loss(0.0, 1, fp)));
  CHECK(std::isfinite(focal_loss(1.0, -1, fp)));
}

TEST_CASE("smooth l1 hand values and smooth knee") {
  CHECK(smooth_l1(0.0) == 0.0);
  CHECK(smooth_l1(1.0) == doctest::Approx(0.5));
  CHECK(smooth_l1(-1.0) == doctest::Approx(0.5));
  CHECK(smooth_l1(0.5) == doctest::Approx(0.125));
  CHECK(smooth_l1(3.0) == doctest::Approx(2.5));
  // first derivative is continuous at |x| = 1 (finite differences)
  const double h = 1e-6;
  const double d_in = (smooth_l1(1.0) - smooth_l1(1.0 - h)) / h;
  const double d_out = (smooth_l1(1.0 + h) - smooth_l1(1.0)) / h;
  CHECK(std::abs(d_in - d_out) <= 1e-5);
}

TEST_CASE("regression and combined detection loss") {
  CHECK(regression_loss({1, 2, 3, 4}, {1, 2, 3, 4}) == 0.0);
  CHECK(regression_loss({0.5, 0.5, 0.5, 0.5}, {0, 0, 0, 0}) == doctest::Approx(0.5));
  CHECK(regression_loss({2, 0, 0, 0}, {0, 0, 0, 0}) == doctest::Approx(1.5));
  FocalParams fp{2.0, 0.25, 1.0};
  CHECK(detection_loss(0.5, 0.25, fp) == doctest::Approx(0.75));
  CHECK(detection_loss(0.42, 0.0, fp) == doctest::Approx(0.42));
  fp.lambda = 0.0;
  CHECK(detection_loss(0.42, 100.0, fp) == doctest::Approx(0.42));
}

namespace {

std::vector<ImageAnnotations> one_image(std::vector<Detection> boxes) {
  ImageAnnotations img;
  img.image_id = "img";
  img.boxes = std::move(boxes);
  return {img};
}

}  // namespace

TEST_CASE("average precision endpoints") {
  const auto gts = one_image({{{0, 0, 10, 10}, 1.0}, {{20, 20, 30, 30}, 1.0}});
  // perfect detections
  CHECK(average_precision(one_image({{{0, 0, 10, 10}, 0.9}, {{20, 20, 30, 30}, 0.8}}), gts,
                          0.5, 0.5) == doctest::Approx(1.0));
  // nothing matches
  CHECK(average_precision(one_image({{{50, 50, 60, 60}, 0.9}}), gts, 0.5, 0.5) ==
        doctest::Approx(0.0));
  // empty detections
  CHECK(average_precision(one_image({}), gts, 0.5, 0.5) == doctest::Approx(0.0));
  // no ground truth is undefined
  CHECK_THROWS_AS(average_precision(gts, one_image({}), 0.5, 0.5), EvaluationError);
}

TEST_CASE("average precision hand trace gives 5/6") {
  const auto gts = one_image({{{0, 0, 10, 10}, 1.0}, {{20, 20, 30, 30}, 1.0}});
  const auto dets = one_image(
      {{{0, 0, 10, 10}, 0.9}, {{40, 40, 50, 50}, 0.8}, {{20, 20, 30, 30}, 0.7}});
  CHECK(average_precision(dets, gts, 0.5, 0.5) == doctest::Approx(5.0 / 6.0).epsilon(1e-9));

  const auto curve = precision_recall_curve(dets, gts, 0.5, 0.5);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].first == doctest::Approx(0.5));
  CHECK(curve[0].second == doctest::Approx(1.0));
  CHECK(curve[2].first == doctest::Approx(1.0));
  CHECK(curve[2].second == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("average precision ignores detection order within a confidence tier") {
  Rng rng(9);
  std::vector<Detection> gt_boxes, det_boxes;
  for (int i = 0; i < 8; ++i) {
    const double x = 12.0 * i;
    gt_boxes.push_back({{x, 0, x + 10, 10}, 1.0});
    // half the detections share one confidence tier
    det_boxes.push_back({{x + rng.uniform(-1, 1), rng.uniform(-1, 1), x + 10, 10},
                         i % 2 == 0 ? 0.8 : rng.uniform(0.5, 1.0)});
  }
  det_boxes.push_back({{100, 100, 110, 110}, 0.8});  // an extra tier-0.8 false positive
  const auto gts = one_image(gt_boxes);
  const double base = average_precision(one_image(det_boxes), gts, 0.5, 0.5);
  for (int t = 0; t < 10; ++t) {
    rng.shuffle(det_boxes);
    CHECK(average_precision(one_image(det_boxes), gts, 0.5, 0.5) ==
          doctest::Approx(base).epsilon(1e-12));
  }
}
