#pragma once

#include <array>
#include <string>
#include <vector>

namespace herdmetric::detgeom {

struct Box {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
};

struct Detection {
  Box box;
  double confidence = 0.0;
};

struct Anchor {
  Box box;
  double width() const { return box.width(); }
  double height() const { return box.height(); }
};

struct FocalParams {
  double gamma = 2.0;
  double alpha = 0.25;
  double lambda = 1.0;
};

using Offsets = std::array<double, 4>;  // (T_x1, T_y1, T_x2, T_y2)

double iou(const Box& a, const Box& b);

// Greedy suppression: sort by confidence descending (ties by input index),
// keep the best, drop anything with IoU > threshold against a kept box.
std::vector<Detection> nms(const std::vector<Detection>& dets, double threshold);

// x offsets normalized by anchor width, y offsets by anchor height.
Offsets encode_offsets(const Box& gt, const Anchor& anchor);
Box decode_offsets(const Offsets& t, const Anchor& anchor);

// y in {+1, -1}. p is clamped to [1e-7, 1-1e-7] before the logarithm.
double focal_loss(double p, int y, const FocalParams& params);
double smooth_l1(double x);
double regression_loss(const Offsets& predicted, const Offsets& target);
double detection_loss(double reg, double fl, const FocalParams& params);

struct ImageAnnotations {
  std::string image_id;
  std::vector<Detection> boxes;  // confidence ignored for ground truth
};

// Pooled average precision over images: detections above conf_thresh are
// ranked by confidence, greedily matched (each ground truth at most once,
// best IoU >= iou_thresh wins), and AP is the area under the precision
// envelope over recall (all-points interpolation). Equal-confidence
// detections form a single PR tier, so reordering inside a tier cannot
// change the result.
double average_precision(const std::vector<ImageAnnotations>& detections,
                         const std::vector<ImageAnnotations>& ground_truths,
                         double iou_thresh, double conf_thresh);

// PR points (recall, precision) at each confidence tier, for plotting.
std::vector<std::pair<double, double>> precision_recall_curve(
    const std::vector<ImageAnnotations>& detections,
    const std::vector<ImageAnnotations>& ground_truths, double iou_thresh,
    double conf_thresh);

}  // namespace herdmetric::detgeom
