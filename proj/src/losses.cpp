#include "herdmetric/losses.hpp"

#include <algorithm>
#include <cmath>

#include "herdmetric/error.hpp"

namespace herdmetric {

LossKind parse_loss_kind(const std::string& name) {
  if (name == "contrastive") return LossKind::contrastive;
  if (name == "tl") return LossKind::tl;
  if (name == "rtl") return LossKind::rtl;
  if (name == "softmax") return LossKind::softmax;
  if (name == "softmax-tl") return LossKind::softmax_tl;
  if (name == "softmax-rtl") return LossKind::softmax_rtl;
  throw ConfigError("unknown loss kind '" + name +
                    "' (valid: contrastive, tl, rtl, softmax, softmax-tl, softmax-rtl)");
}

std::string loss_kind_name(LossKind k) {
  switch (k) {
    case LossKind::contrastive: return "contrastive";
    case LossKind::tl: return "tl";
    case LossKind::rtl: return "rtl";
    case LossKind::softmax: return "softmax";
    case LossKind::softmax_tl: return "softmax-tl";
    case LossKind::softmax_rtl: return "softmax-rtl";
  }
  return "?";
}

bool loss_uses_head(LossKind k) {
  return k == LossKind::softmax || k == LossKind::softmax_tl || k == LossKind::softmax_rtl;
}

bool loss_uses_mining(LossKind k) { return k != LossKind::softmax; }

bool loss_is_rtl_family(LossKind k) {
  return k == LossKind::rtl || k == LossKind::softmax_rtl;
}

double contrastive_from_distance(double d, int y, const LossConfig& cfg) {
  if (y == 0) return 0.5 * d;
  return 0.5 * std::max(0.0, cfg.margin - d);
}

double triplet_from_distances(double d_ap, double d_an, const LossConfig& cfg) {
  return std::max(0.0, d_ap - d_an + cfg.margin);
}

double reciprocal_from_distances(double d_ap, double d_an, const LossConfig& cfg) {
  return d_ap + 1.0 / (d_an + cfg.epsilon);
}

double contrastive(const Vec& x1, const Vec& x2, int y, const LossConfig& cfg) {
  return contrastive_from_distance(euclidean_distance(x1, x2), y, cfg);
}

double triplet(const Vec& xa, const Vec& xp, const Vec& xn, const LossConfig& cfg) {
  return triplet_from_distances(euclidean_distance(xa, xp), euclidean_distance(xa, xn), cfg);
}

double reciprocal_triplet(const Vec& xa, const Vec& xp, const Vec& xn, const LossConfig& cfg) {
  return reciprocal_from_distances(euclidean_distance(xa, xp), euclidean_distance(xa, xn), cfg);
}

double softmax_ce(const Vec& logits, std::size_t class_index) {
  if (class_index >= logits.size())
    throw DimensionError("softmax_ce: class index out of range");
  const double m = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double v : logits) denom += std::exp(v - m);
  return -(logits[class_index] - m - std::log(denom));
}

double combined(double softmax_value, double metric_value, const LossConfig& cfg) {
  return softmax_value + cfg.lambda * metric_value;
}

namespace {

// d/dx of d(x, other) is (x - other)/d; zero subgradient at d = 0.
void add_distance_grad(const Vec& x, const Vec& other, double d, double coeff, Vec& gx) {
  if (d < 1e-300) return;
  const double c = coeff / d;
  for (std::size_t i = 0; i < x.size(); ++i) gx[i] += c * (x[i] - other[i]);
}

}  // namespace

void contrastive_grad(const Vec& x1, const Vec& x2, int y, const LossConfig& cfg,
                      Vec& g1, Vec& g2, double scale) {
  const double d = euclidean_distance(x1, x2);
  double dl_dd = 0.0;
  if (y == 0) {
    dl_dd = 0.5;
  } else if (cfg.margin - d > 0.0) {
    dl_dd = -0.5;
  }
  add_distance_grad(x1, x2, d, scale * dl_dd, g1);
  add_distance_grad(x2, x1, d, scale * dl_dd, g2);
}

void triplet_grad(const Vec& xa, const Vec& xp, const Vec& xn, const LossConfig& cfg,
                  Vec& ga, Vec& gp, Vec& gn, double scale) {
  const double d_ap = euclidean_distance(xa, xp);
  const double d_an = euclidean_distance(xa, xn);
  if (d_ap - d_an + cfg.margin <= 0.0) return;  // hinge inactive
  add_distance_grad(xa, xp, d_ap, scale, ga);
  add_distance_grad(xp, xa, d_ap, scale, gp);
  add_distance_grad(xa, xn, d_an, -scale, ga);
  add_distance_grad(xn, xa, d_an, -scale, gn);
}

void reciprocal_triplet_grad(const Vec& xa, const Vec& xp, const Vec& xn,
                             const LossConfig& cfg, Vec& ga, Vec& gp, Vec& gn,
                             double scale) {
  const double d_ap = euclidean_distance(xa, xp);
  const double d_an = euclidean_distance(xa, xn);
  add_distance_grad(xa, xp, d_ap, scale, ga);
  add_distance_grad(xp, xa, d_ap, scale, gp);
  const double g = d_an + cfg.epsilon;
  const double dl_dan = -1.0 / (g * g);
  add_distance_grad(xa, xn, d_an, scale * dl_dan, ga);
  add_distance_grad(xn, xa, d_an, scale * dl_dan, gn);
}

double softmax_ce_grad(const Vec& logits, std::size_t class_index, Vec& g_logits,
                       double scale) {
  if (class_index >= logits.size())
    throw DimensionError("softmax_ce_grad: class index out of range");
  const Vec p = softmax(logits);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    g_logits[i] += scale * (p[i] - (i == class_index ? 1.0 : 0.0));
  }
  return softmax_ce(logits, class_index);
}

}  // namespace herdmetric
