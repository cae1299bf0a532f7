#pragma once

#include <cstdint>
#include <vector>

#include "herdmetric/coatgen.hpp"

namespace herdmetric::dataset {

using coatgen::Herd;
using coatgen::Instance;
using coatgen::SourceTag;

// Instance ids are indices into Herd::instances.
struct ClassSplit {
  int identity_id = 0;
  SourceTag source_tag = SourceTag::A;
  std::vector<int> train;
  std::vector<int> val;   // floor((total - 10) / 10) instances
  std::vector<int> test;  // exactly 10 instances
};

struct OpenSetSplit {
  double openness_ratio = 0.0;
  int ratio_index = 0;
  int repetition_index = 0;
  std::uint64_t seed = 0;
  std::vector<int> known;    // identity ids, sorted
  std::vector<int> unknown;  // identity ids, sorted
};

// One persistable split file: the class-level instance assignment plus the
// known/unknown partition it is evaluated under.
struct SplitDocument {
  OpenSetSplit openset;
  std::vector<ClassSplit> classes;  // ordered by identity_id
};

// Per class: shuffle, take 10 test instances, split the rest 9:1 into
// train:val (val = floor(remaining/10)).
std::vector<ClassSplit> make_class_splits(const Herd& herd, std::uint64_t seed);

// |unknown| = round-half-up(ratio * total); unknown identities sampled
// equally per source (counts differ by at most 1 where capacities allow).
// Repetition seed = mix(seed, ratio_index, repetition_index), so regenerating
// with the same master seed always reproduces the same splits.
std::vector<OpenSetSplit> make_openset_splits(
    const std::vector<std::pair<int, SourceTag>>& identities,
    const std::vector<double>& ratios, int reps, std::uint64_t seed);

std::vector<SplitDocument> make_split_documents(const Herd& herd,
                                                const std::vector<double>& ratios,
                                                int reps, std::uint64_t seed);

}  // namespace herdmetric::dataset
