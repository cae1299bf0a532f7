#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "herdmetric/dataset.hpp"
#include "herdmetric/embednet.hpp"
#include "herdmetric/linalg.hpp"

namespace herdmetric::openset {

using dataset::SplitDocument;

enum class Membership { train, val };

// Every non-testing instance of every class, known and unknown.
struct Gallery {
  std::vector<Vec> embeddings;
  std::vector<int> labels;
  std::vector<Membership> membership;
};

// Majority vote among the k nearest entries (Euclidean). Ties: smallest
// summed distance among tied labels, then smallest label. Neighbor selection
// orders by (distance, label), so gallery permutations cannot change the
// answer.
int knn_classify(const Gallery& gallery, const Vec& query, int k);

struct QueryRecord {
  int instance_id = 0;
  int true_label = 0;
  int predicted_label = 0;
  bool known = false;
};

struct EvalResult {
  double ratio = 0.0;
  int repetition = 0;
  double accuracy = 0.0;
  double error_known_fraction = 0.0;    // of all errors, share with known truth
  double error_unknown_fraction = 0.0;  // both zero when there are no errors
  std::vector<QueryRecord> queries;
};

using Embedder = std::function<Vec(const coatgen::Instance&)>;

// Gallery from all train+val instances of all classes; queries are all test
// instances. max_distance, when set, rejects queries whose nearest gallery
// entry is farther away (predicted label -1).
EvalResult evaluate_split(const embednet::EmbedNet& net, const SplitDocument& split,
                          const coatgen::Herd& herd, int k,
                          std::optional<double> max_distance = std::nullopt);
// Same protocol with an arbitrary embedding function (test oracles).
EvalResult evaluate_split_with(const Embedder& embedder, const SplitDocument& split,
                               const coatgen::Herd& herd, int k,
                               std::optional<double> max_distance = std::nullopt);

// Closed-set baseline: argmax over the trained head's known classes, so
// unknown-class queries are always wrong.
EvalResult closed_set_baseline(const embednet::EmbedNet& net, const embednet::ClassHead& head,
                               const std::vector<int>& known_ids, const SplitDocument& split,
                               const coatgen::Herd& herd);

// A sweep entry: a trainable loss plus the evaluation protocol. "baseline"
// is softmax training with closed-set evaluation.
struct SweepKind {
  LossKind loss = LossKind::softmax_rtl;
  bool closed_set = false;
  std::string name;
};
SweepKind parse_sweep_kind(const std::string& name);

struct SweepRow {
  std::string kind;
  double ratio = 0.0;
  int repetition = 0;
  double accuracy = 0.0;
  double err_known = 0.0;
  double err_unknown = 0.0;
};

struct SweepSummaryRow {
  std::string kind;
  double ratio = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepSummaryRow> summary;
};

using SweepProgress = std::function<void(const SweepRow&)>;

// Trains and evaluates every (kind, split) pair; per-run training seed is
// derived from the split seed and the kind, so the sweep is reproducible
// from the split files alone.
SweepResult openness_sweep(const coatgen::Herd& herd,
                           const std::vector<SplitDocument>& splits,
                           const std::vector<SweepKind>& kinds,
                           const embednet::TrainConfig& config,
                           const SweepProgress& progress = nullptr);

}  // namespace herdmetric::openset
