#include "herdmetric/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "herdmetric/error.hpp"

namespace herdmetric::dataset {

std::vector<ClassSplit> make_class_splits(const Herd& herd, std::uint64_t seed) {
  std::map<int, std::vector<int>> by_identity;
  std::map<int, SourceTag> tag_of;
  for (std::size_t i = 0; i < herd.instances.size(); ++i) {
    by_identity[herd.instances[i].identity_id].push_back(static_cast<int>(i));
    tag_of[herd.instances[i].identity_id] = herd.instances[i].source_tag;
  }

  std::vector<ClassSplit> splits;
  splits.reserve(by_identity.size());
  for (auto& [id, ids] : by_identity) {
    if (ids.size() < 20)
      throw ValidationError("make_class_splits: identity " + std::to_string(id) +
                            " has only " + std::to_string(ids.size()) +
                            " instances (minimum 20)");
    Rng rng(seed_mix(seed, 3, static_cast<std::uint64_t>(id)));
    rng.shuffle(ids);

    ClassSplit cs;
    cs.identity_id = id;
    cs.source_tag = tag_of[id];
    cs.test.assign(ids.begin(), ids.begin() + 10);
    const std::size_t remaining = ids.size() - 10;
    const std::size_t val_count = remaining / 10;  // 9:1, floor on val
    cs.val.assign(ids.begin() + 10, ids.begin() + 10 + val_count);
    cs.train.assign(ids.begin() + 10 + val_count, ids.end());
    std::sort(cs.test.begin(), cs.test.end());
    std::sort(cs.val.begin(), cs.val.end());
    std::sort(cs.train.begin(), cs.train.end());
    splits.push_back(std::move(cs));
  }
  return splits;
}

std::vector<OpenSetSplit> make_openset_splits(
    const std::vector<std::pair<int, SourceTag>>& identities,
    const std::vector<double>& ratios, int reps, std::uint64_t seed) {
  if (reps < 1) throw ValidationError("make_openset_splits: reps must be >= 1");
  const std::size_t total = identities.size();
  if (total < 2) throw ValidationError("make_openset_splits: need at least 2 identities");

  std::map<SourceTag, std::vector<int>> by_source;
  for (const auto& [id, tag] : identities) by_source[tag].push_back(id);
  for (auto& [tag, ids] : by_source) std::sort(ids.begin(), ids.end());

  std::vector<OpenSetSplit> out;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    const double ratio = ratios[ri];
    if (!(ratio > 0.0 && ratio < 1.0))
      throw ValidationError("make_openset_splits: ratio must lie in (0,1)");
    const std::size_t unknown_count =
        static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) + 0.5));
    if (unknown_count == 0 || unknown_count >= total)
      throw ValidationError("make_openset_splits: ratio " + std::to_string(ratio) +
                            " leaves no known or no unknown identities");

    for (int rep = 0; rep < reps; ++rep) {
      Rng rng(seed_mix(seed, static_cast<std::uint64_t>(ri), static_cast<std::uint64_t>(rep)));

      // Equal per-source quotas; the remainder goes to a random subset of
      // sources, and overflow beyond a source's capacity spills to the rest.
      std::vector<SourceTag> sources;
      for (const auto& [tag, ids] : by_source) sources.push_back(tag);
      std::vector<SourceTag> extra_order = sources;
      rng.shuffle(extra_order);

      const std::size_t ns = sources.size();
      std::map<SourceTag, std::size_t> quota;
      for (SourceTag t : sources) quota[t] = unknown_count / ns;
      for (std::size_t e = 0; e < unknown_count % ns; ++e) quota[extra_order[e]] += 1;

      // Spill quota that exceeds a source's population.
      for (bool changed = true; changed;) {
        changed = false;
        for (SourceTag t : sources) {
          const std::size_t cap = by_source[t].size();
          if (quota[t] > cap) {
            std::size_t excess = quota[t] - cap;
            quota[t] = cap;
            for (SourceTag o : extra_order) {
              if (excess == 0) break;
              if (o == t) continue;
              const std::size_t room = by_source[o].size() - std::min(quota[o], by_source[o].size());
              const std::size_t take = std::min(room, excess);
              quota[o] += take;
              excess -= take;
            }
            if (excess > 0)
              throw ValidationError("make_openset_splits: not enough identities for ratio " +
                                    std::to_string(ratio));
            changed = true;
          }
        }
      }

      OpenSetSplit split;
      split.openness_ratio = ratio;
      split.ratio_index = static_cast<int>(ri);
      split.repetition_index = rep;
      split.seed = seed_mix(seed, static_cast<std::uint64_t>(ri), static_cast<std::uint64_t>(rep));
      for (SourceTag t : sources) {
        std::vector<int> pool = by_source[t];
        rng.shuffle(pool);
        for (std::size_t i = 0; i < quota[t]; ++i) split.unknown.push_back(pool[i]);
      }
      std::sort(split.unknown.begin(), split.unknown.end());
      for (const auto& [id, tag] : identities) {
        if (!std::binary_search(split.unknown.begin(), split.unknown.end(), id))
          split.known.push_back(id);
      }
      std::sort(split.known.begin(), split.known.end());
      out.push_back(std::move(split));
    }
  }
  return out;
}

std::vector<SplitDocument> make_split_documents(const Herd& herd,
                                                const std::vector<double>& ratios,
                                                int reps, std::uint64_t seed) {
  const std::vector<ClassSplit> classes = make_class_splits(herd, seed);
  std::vector<std::pair<int, SourceTag>> identities;
  identities.reserve(classes.size());
  for (const ClassSplit& cs : classes) identities.emplace_back(cs.identity_id, cs.source_tag);

  std::vector<SplitDocument> docs;
  for (OpenSetSplit& os : make_openset_splits(identities, ratios, reps, seed)) {
    SplitDocument doc;
    doc.openset = std::move(os);
    doc.classes = classes;
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace herdmetric::dataset
