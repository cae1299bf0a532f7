#include "herdmetric/mining.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "herdmetric/error.hpp"
#include "herdmetric/kernels.hpp"

namespace herdmetric::mining {

void validate_batch(const TripletBatch& batch) {
  if (batch.p < 2)
    throw MiningError("triplet batch needs at least 2 classes, got " +
                      std::to_string(batch.p));
  if (batch.k < 2)
    throw MiningError("triplet batch needs K >= 2 so positives exist, got K=" +
                      std::to_string(batch.k));
  const std::size_t n = static_cast<std::size_t>(batch.p) * batch.k;
  if (batch.embeddings.size() != n || batch.labels.size() != n)
    throw MiningError("triplet batch size mismatch: expected " + std::to_string(n) +
                      " embeddings");
  std::map<int, int> counts;
  for (int l : batch.labels) counts[l] += 1;
  if (counts.size() != static_cast<std::size_t>(batch.p))
    throw MiningError("triplet batch must contain exactly P distinct classes");
  for (const auto& [label, c] : counts)
    if (c != batch.k)
      throw MiningError("class " + std::to_string(label) + " appears " +
                        std::to_string(c) + " times, expected K=" + std::to_string(batch.k));
}

namespace {

std::vector<double> distance_matrix(const TripletBatch& batch) {
  const int n = static_cast<int>(batch.embeddings.size());
  const int d = static_cast<int>(batch.embeddings[0].size());
  std::vector<double> flat(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    if (batch.embeddings[i].size() != static_cast<std::size_t>(d))
      throw DimensionError("triplet batch embeddings have mixed dimensions");
    std::copy(batch.embeddings[i].begin(), batch.embeddings[i].end(),
              flat.begin() + static_cast<std::size_t>(i) * d);
  }
  std::vector<double> dist(static_cast<std::size_t>(n) * n);
  kernels::pairwise_distances(flat.data(), dist.data(), n, d);
  return dist;
}

}  // namespace

BatchHardResult batch_hard_loss(const TripletBatch& batch, const LossConfig& cfg,
                                MiningBase base) {
  validate_batch(batch);
  const int n = static_cast<int>(batch.embeddings.size());
  const std::vector<double> dist = distance_matrix(batch);

  BatchHardResult result;
  result.selections.resize(n);
  for (int a = 0; a < n; ++a) {
    int hp = -1, hn = -1;
    double dp = -1.0, dn = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = dist[static_cast<std::size_t>(a) * n + j];
      if (batch.labels[j] == batch.labels[a]) {
        if (d > dp) {
          dp = d;
          hp = j;
        }
      } else if (hn < 0 || d < dn) {
        dn = d;
        hn = j;
      }
    }
    result.selections[a] = {hp, hn};
    result.loss += base == MiningBase::tl ? triplet_from_distances(dp, dn, cfg)
                                          : reciprocal_from_distances(dp, dn, cfg);
  }
  return result;
}

std::vector<HardSelection> brute_force_hard(const TripletBatch& batch) {
  validate_batch(batch);
  const int n = static_cast<int>(batch.embeddings.size());
  std::vector<HardSelection> out(n);
  for (int a = 0; a < n; ++a) {
    int hp = -1, hn = -1;
    double dp = -1.0, dn = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == a) continue;
      const double d = euclidean_distance(batch.embeddings[a], batch.embeddings[j]);
      if (batch.labels[j] == batch.labels[a]) {
        if (d > dp) {
          dp = d;
          hp = j;
        }
      } else if (hn < 0 || d < dn) {
        dn = d;
        hn = j;
      }
    }
    out[a] = {hp, hn};
  }
  return out;
}

double batch_all_loss(const TripletBatch& batch, const LossConfig& cfg, MiningBase base) {
  validate_batch(batch);
  const int n = static_cast<int>(batch.embeddings.size());
  const std::vector<double> dist = distance_matrix(batch);

  double sum = 0.0;
  long count = 0;
  for (int a = 0; a < n; ++a) {
    for (int p = 0; p < n; ++p) {
      if (p == a || batch.labels[p] != batch.labels[a]) continue;
      for (int neg = 0; neg < n; ++neg) {
        if (batch.labels[neg] == batch.labels[a]) continue;
        const double dp = dist[static_cast<std::size_t>(a) * n + p];
        const double dn = dist[static_cast<std::size_t>(a) * n + neg];
        const double l = base == MiningBase::tl ? triplet_from_distances(dp, dn, cfg)
                                                : reciprocal_from_distances(dp, dn, cfg);
        if (l > 0.0) {
          sum += l;
          ++count;
        }
      }
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

BatchIndices sample_batch(const std::map<int, std::vector<int>>& train_pool, int p,
                          int k, Rng& rng) {
  if (p < 2)
    throw SamplingError("sample_batch: P must be >= 2 so negatives exist, got " +
                        std::to_string(p));
  if (k < 2)
    throw SamplingError("sample_batch: K must be >= 2 so positives exist, got " +
                        std::to_string(k));

  std::vector<int> eligible;
  for (const auto& [id, ids] : train_pool)
    if (static_cast<int>(ids.size()) >= k) eligible.push_back(id);
  if (static_cast<int>(eligible.size()) < p)
    throw SamplingError("sample_batch: need " + std::to_string(p) + " classes with >= " +
                        std::to_string(k) + " instances, only " +
                        std::to_string(eligible.size()) + " available");

  rng.shuffle(eligible);
  BatchIndices batch;
  batch.p = p;
  batch.k = k;
  for (int c = 0; c < p; ++c) {
    const int label = eligible[c];
    std::vector<int> pool = train_pool.at(label);
    rng.shuffle(pool);
    for (int j = 0; j < k; ++j) {
      batch.instance_ids.push_back(pool[j]);
      batch.labels.push_back(label);
    }
  }
  return batch;
}

}  // namespace herdmetric::mining
