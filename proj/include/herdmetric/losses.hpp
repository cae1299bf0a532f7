#pragma once

#include <string>
#include <vector>

#include "herdmetric/linalg.hpp"

namespace herdmetric {

struct LossConfig {
  double margin = 1.0;     // alpha, hinge margin for triplet/contrastive
  double lambda = 0.01;    // weight of the metric term in combined losses
  double epsilon = 1e-8;   // guard for the reciprocal term at d(a,n) = 0
};

enum class LossKind {
  contrastive,
  tl,
  rtl,
  softmax,
  softmax_tl,
  softmax_rtl,
};

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind k);
// All kinds that contain a cross-entropy term need the classification head.
bool loss_uses_head(LossKind k);
// All kinds except pure softmax mine triplets from the batch.
bool loss_uses_mining(LossKind k);
// Momentum is disabled for the reciprocal family during training.
bool loss_is_rtl_family(LossKind k);

// (1-Y) 1/2 d + Y 1/2 max(0, margin - d), Y in {0 similar, 1 dissimilar}.
double contrastive(const Vec& x1, const Vec& x2, int y, const LossConfig& cfg);
// max(0, d(a,p) - d(a,n) + margin)
double triplet(const Vec& xa, const Vec& xp, const Vec& xn, const LossConfig& cfg);
// d(a,p) + 1/(d(a,n) + epsilon); margin-free
double reciprocal_triplet(const Vec& xa, const Vec& xp, const Vec& xn, const LossConfig& cfg);
// -log softmax(logits)[class_index], max-stabilized
double softmax_ce(const Vec& logits, std::size_t class_index);
// softmax_value + lambda * metric_value
double combined(double softmax_value, double metric_value, const LossConfig& cfg);

// Distance-level forms shared with mining (same value on precomputed d).
double contrastive_from_distance(double d, int y, const LossConfig& cfg);
double triplet_from_distances(double d_ap, double d_an, const LossConfig& cfg);
double reciprocal_from_distances(double d_ap, double d_an, const LossConfig& cfg);

// Gradients accumulate into the g_* buffers (same length as the inputs).
void contrastive_grad(const Vec& x1, const Vec& x2, int y, const LossConfig& cfg,
                      Vec& g1, Vec& g2, double scale = 1.0);
void triplet_grad(const Vec& xa, const Vec& xp, const Vec& xn, const LossConfig& cfg,
                  Vec& ga, Vec& gp, Vec& gn, double scale = 1.0);
void reciprocal_triplet_grad(const Vec& xa, const Vec& xp, const Vec& xn,
                             const LossConfig& cfg, Vec& ga, Vec& gp, Vec& gn,
                             double scale = 1.0);
// Returns the loss; g_logits gets scale * (softmax(logits) - onehot) added.
double softmax_ce_grad(const Vec& logits, std::size_t class_index, Vec& g_logits,
                       double scale = 1.0);

}  // namespace herdmetric
