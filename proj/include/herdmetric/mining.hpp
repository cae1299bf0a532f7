#pragma once

#include <map>
#include <vector>

#include "herdmetric/linalg.hpp"
#include "herdmetric/losses.hpp"
#include "herdmetric/rng.hpp"

namespace herdmetric::mining {

enum class MiningBase { tl, rtl };

struct TripletBatch {
  std::vector<Vec> embeddings;  // P*K rows
  std::vector<int> labels;      // identity per row
  int p = 0;
  int k = 0;
};

// Throws MiningError unless the batch holds exactly P classes, K members
// each, with K >= 2 and P >= 2.
void validate_batch(const TripletBatch& batch);

struct HardSelection {
  int positive = -1;  // farthest same-class co-member
  int negative = -1;  // nearest other-class member
};

struct BatchHardResult {
  double loss = 0.0;  // summed over all P*K anchors
  std::vector<HardSelection> selections;
};

// Per anchor: hardest positive = argmax d over same-class co-members,
// hardest negative = argmin d over other-class members; ties by lowest
// index. Loss uses the hinge (tl) or reciprocal (rtl) form.
BatchHardResult batch_hard_loss(const TripletBatch& batch, const LossConfig& cfg,
                                MiningBase base);

// Exhaustive per-pair scan; the test oracle batch_hard_loss must agree with.
std::vector<HardSelection> brute_force_hard(const TripletBatch& batch);

// Mean per-triplet loss over all valid (a,p,n) with nonzero loss; an
// all-zero batch yields 0.
double batch_all_loss(const TripletBatch& batch, const LossConfig& cfg, MiningBase base);

struct BatchIndices {
  std::vector<int> instance_ids;
  std::vector<int> labels;
  int p = 0;
  int k = 0;
};

// Uniform sample of P classes without replacement from those with >= K
// instances, then K instances without replacement within each class.
BatchIndices sample_batch(const std::map<int, std::vector<int>>& train_pool, int p,
                          int k, Rng& rng);

}  // namespace herdmetric::mining
