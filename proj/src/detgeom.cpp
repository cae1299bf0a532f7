#include "herdmetric/detgeom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "herdmetric/error.hpp"

namespace herdmetric::detgeom {

namespace {
void require_valid(const Box& b, const char* what) {
  if (!(b.x1 < b.x2) || !(b.y1 < b.y2))
    throw ValidationError(std::string(what) + ": degenerate box");
}
}  // namespace

double iou(const Box& a, const Box& b) {
  require_valid(a, "iou");
  require_valid(b, "iou");
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = std::max(0.0, ix2 - ix1);
  const double ih = std::max(0.0, iy2 - iy1);
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (iou(dets[idx].box, k.box) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(dets[idx]);
  }
  return kept;
}

Offsets encode_offsets(const Box& gt, const Anchor& anchor) {
  require_valid(gt, "encode_offsets");
  require_valid(anchor.box, "encode_offsets anchor");
  const double aw = anchor.width();
  const double ah = anchor.height();
  return {(gt.x1 - anchor.box.x1) / aw, (gt.y1 - anchor.box.y1) / ah,
          (gt.x2 - anchor.box.x2) / aw, (gt.y2 - anchor.box.y2) / ah};
}

Box decode_offsets(const Offsets& t, const Anchor& anchor) {
  require_valid(anchor.box, "decode_offsets anchor");
  const double aw = anchor.width();
  const double ah = anchor.height();
  Box b{anchor.box.x1 + t[0] * aw, anchor.box.y1 + t[1] * ah,
        anchor.box.x2 + t[2] * aw, anchor.box.y2 + t[3] * ah};
  if (!(b.x1 < b.x2) || !(b.y1 < b.y2))
    throw ValidationError("decode_offsets: offsets produce a degenerate box");
  return b;
}

double focal_loss(double p, int y, const FocalParams& params) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  const double pt = y == 1 ? p : 1.0 - p;
  const double at = y == 1 ? params.alpha : 1.0 - params.alpha;
  return -at * std::pow(1.0 - pt, params.gamma) * std::log(pt);
}

double smooth_l1(double x) {
  const double ax = std::abs(x);
  return ax < 1.0 ? 0.5 * x * x : ax - 0.5;
}

double regression_loss(const Offsets& predicted, const Offsets& target) {
  double s = 0.0;
  for (int j = 0; j < 4; ++j) s += smooth_l1(predicted[j] - target[j]);
  return s;
}

double detection_loss(double reg, double fl, const FocalParams& params) {
  return reg + params.lambda * fl;
}

namespace {

struct RankedDet {
  double confidence;
  bool tp;
};

// Shared matcher: rank pooled detections, greedily claim ground truths.
std::vector<RankedDet> match_detections(const std::vector<ImageAnnotations>& detections,
                                        const std::vector<ImageAnnotations>& ground_truths,
                                        double iou_thresh, double conf_thresh,
                                        std::size_t& total_gt) {
  std::map<std::string, const ImageAnnotations*> gt_by_image;
  total_gt = 0;
  for (const auto& g : ground_truths) {
    gt_by_image[g.image_id] = &g;
    total_gt += g.boxes.size();
  }
  if (total_gt == 0)
    throw EvaluationError("average_precision: no ground-truth boxes");

  struct Cand {
    const Detection* det;
    const std::string* image;
  };
  std::vector<Cand> cands;
  for (const auto& d : detections)
    for (const auto& det : d.boxes)
      if (det.confidence >= conf_thresh) cands.push_back({&det, &d.image_id});

  // Ties in confidence are ordered by box coordinates, an intrinsic key, so
  // input order never matters.
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.det->confidence != b.det->confidence)
      return a.det->confidence > b.det->confidence;
    const Box& x = a.det->box;
    const Box& y = b.det->box;
    return std::tie(x.x1, x.y1, x.x2, x.y2) < std::tie(y.x1, y.y1, y.x2, y.y2);
  });

  std::map<std::string, std::vector<bool>> claimed;
  std::vector<RankedDet> ranked;
  ranked.reserve(cands.size());
  for (const Cand& c : cands) {
    bool tp = false;
    auto it = gt_by_image.find(*c.image);
    if (it != gt_by_image.end()) {
      const auto& gts = it->second->boxes;
      auto& used = claimed[*c.image];
      used.resize(gts.size(), false);
      double best = -1.0;
      std::size_t best_j = gts.size();
      for (std::size_t j = 0; j < gts.size(); ++j) {
        if (used[j]) continue;
        const double v = iou(c.det->box, gts[j].box);
        if (v >= iou_thresh && v > best) {
          best = v;
          best_j = j;
        }
      }
      if (best_j < gts.size()) {
        used[best_j] = true;
        tp = true;
      }
    }
    ranked.push_back({c.det->confidence, tp});
  }
  return ranked;
}

std::vector<std::pair<double, double>> pr_points(const std::vector<RankedDet>& ranked,
                                                 std::size_t total_gt) {
  std::vector<std::pair<double, double>> pts;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].tp)
      ++tp;
    else
      ++fp;
    const bool tier_end =
        i + 1 == ranked.size() || ranked[i + 1].confidence != ranked[i].confidence;
    if (tier_end) {
      const double recall = static_cast<double>(tp) / static_cast<double>(total_gt);
      const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
      pts.emplace_back(recall, precision);
    }
  }
  return pts;
}

}  // namespace

std::vector<std::pair<double, double>> precision_recall_curve(
    const std::vector<ImageAnnotations>& detections,
    const std::vector<ImageAnnotations>& ground_truths, double iou_thresh,
    double conf_thresh) {
  std::size_t total_gt = 0;
  const auto ranked = match_detections(detections, ground_truths, iou_thresh,
                                       conf_thresh, total_gt);
  return pr_points(ranked, total_gt);
}

double average_precision(const std::vector<ImageAnnotations>& detections,
                         const std::vector<ImageAnnotations>& ground_truths,
                         double iou_thresh, double conf_thresh) {
  std::size_t total_gt = 0;
  const auto ranked = match_detections(detections, ground_truths, iou_thresh,
                                       conf_thresh, total_gt);
  auto pts = pr_points(ranked, total_gt);
  if (pts.empty()) return 0.0;

  // Precision envelope: p_env(r) = max precision at recall >= r.
  for (std::size_t i = pts.size(); i-- > 1;)
    pts[i - 1].second = std::max(pts[i - 1].second, pts[i].second);

  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& [recall, precision] : pts) {
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

}  // namespace herdmetric::detgeom
