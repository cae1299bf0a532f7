#include "herdmetric/openset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "herdmetric/error.hpp"

namespace herdmetric::openset {

int knn_classify(const Gallery& gallery, const Vec& query, int k) {
  if (gallery.embeddings.empty()) throw EvaluationError("knn_classify: empty gallery");
  if (k < 1) throw EvaluationError("knn_classify: k must be >= 1");

  struct Cand {
    double dist;
    int label;
  };
  std::vector<Cand> cands;
  cands.reserve(gallery.embeddings.size());
  for (std::size_t i = 0; i < gallery.embeddings.size(); ++i)
    cands.push_back({euclidean_distance(gallery.embeddings[i], query), gallery.labels[i]});

  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), cands.size());
  std::partial_sort(cands.begin(), cands.begin() + kk, cands.end(),
                    [](const Cand& a, const Cand& b) {
                      if (a.dist != b.dist) return a.dist < b.dist;
                      return a.label < b.label;
                    });

  // votes, then smallest summed distance, then smallest label
  std::map<int, std::pair<int, double>> tally;
  for (std::size_t i = 0; i < kk; ++i) {
    auto& t = tally[cands[i].label];
    t.first += 1;
    t.second += cands[i].dist;
  }
  int best_label = tally.begin()->first;
  std::pair<int, double> best = tally.begin()->second;
  for (const auto& [label, t] : tally) {
    if (t.first > best.first || (t.first == best.first && t.second < best.second)) {
      best_label = label;
      best = t;
    }
  }
  return best_label;
}

namespace {

struct EvalSets {
  std::vector<int> gallery_ids;
  std::vector<int> gallery_labels;
  std::vector<Membership> gallery_membership;
  std::vector<int> query_ids;
  std::vector<int> query_labels;
  std::vector<bool> query_known;
};

EvalSets collect_sets(const SplitDocument& split, const coatgen::Herd& herd) {
  EvalSets s;
  for (const dataset::ClassSplit& cs : split.classes) {
    const bool known = std::binary_search(split.openset.known.begin(),
                                          split.openset.known.end(), cs.identity_id);
    for (int i : cs.train) {
      s.gallery_ids.push_back(i);
      s.gallery_labels.push_back(cs.identity_id);
      s.gallery_membership.push_back(Membership::train);
    }
    for (int i : cs.val) {
      s.gallery_ids.push_back(i);
      s.gallery_labels.push_back(cs.identity_id);
      s.gallery_membership.push_back(Membership::val);
    }
    for (int i : cs.test) {
      s.query_ids.push_back(i);
      s.query_labels.push_back(cs.identity_id);
      s.query_known.push_back(known);
    }
  }
  for (int id : s.gallery_ids)
    if (id < 0 || static_cast<std::size_t>(id) >= herd.instances.size())
      throw EvaluationError("evaluate_split: split references instance " +
                            std::to_string(id) + " outside the herd");
  return s;
}

EvalResult finish_eval(const SplitDocument& split, const EvalSets& sets,
                       const std::vector<int>& predictions) {
  EvalResult r;
  r.ratio = split.openset.openness_ratio;
  r.repetition = split.openset.repetition_index;
  int correct = 0, err_known = 0, err_unknown = 0;
  for (std::size_t q = 0; q < predictions.size(); ++q) {
    const bool ok = predictions[q] == sets.query_labels[q];
    if (ok)
      ++correct;
    else if (sets.query_known[q])
      ++err_known;
    else
      ++err_unknown;
    r.queries.push_back({sets.query_ids[q], sets.query_labels[q], predictions[q],
                         sets.query_known[q]});
  }
  const int total_err = err_known + err_unknown;
  r.accuracy = predictions.empty()
                   ? 0.0
                   : static_cast<double>(correct) / static_cast<double>(predictions.size());
  if (total_err > 0) {
    r.error_known_fraction = static_cast<double>(err_known) / total_err;
    r.error_unknown_fraction = static_cast<double>(err_unknown) / total_err;
  }
  return r;
}

EvalResult evaluate_embedded(const SplitDocument& split, const EvalSets& sets,
                             std::vector<Vec> gallery_embs, std::vector<Vec> query_embs,
                             int k, std::optional<double> max_distance) {
  Gallery gallery;
  gallery.embeddings = std::move(gallery_embs);
  gallery.labels = sets.gallery_labels;
  gallery.membership = sets.gallery_membership;

  std::vector<int> predictions(query_embs.size());
  for (std::size_t q = 0; q < query_embs.size(); ++q) {
    if (max_distance) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const Vec& g : gallery.embeddings)
        nearest = std::min(nearest, euclidean_distance(g, query_embs[q]));
      if (nearest > *max_distance) {
        predictions[q] = -1;  // rejected as an outlier
        continue;
      }
    }
    predictions[q] = knn_classify(gallery, query_embs[q], k);
  }
  return finish_eval(split, sets, predictions);
}

}  // namespace

EvalResult evaluate_split(const embednet::EmbedNet& net, const SplitDocument& split,
                          const coatgen::Herd& herd, int k,
                          std::optional<double> max_distance) {
  const EvalSets sets = collect_sets(split, herd);
  return evaluate_embedded(split, sets, embednet::embed_all(net, herd, sets.gallery_ids),
                           embednet::embed_all(net, herd, sets.query_ids), k, max_distance);
}

EvalResult evaluate_split_with(const Embedder& embedder, const SplitDocument& split,
                               const coatgen::Herd& herd, int k,
                               std::optional<double> max_distance) {
  const EvalSets sets = collect_sets(split, herd);
  auto embed_ids = [&](const std::vector<int>& ids) {
    std::vector<Vec> out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(embedder(herd.instances[id]));
    return out;
  };
  return evaluate_embedded(split, sets, embed_ids(sets.gallery_ids),
                           embed_ids(sets.query_ids), k, max_distance);
}

EvalResult closed_set_baseline(const embednet::EmbedNet& net, const embednet::ClassHead& head,
                               const std::vector<int>& known_ids, const SplitDocument& split,
                               const coatgen::Herd& herd) {
  if (known_ids.size() != static_cast<std::size_t>(head.classes()))
    throw EvaluationError("closed_set_baseline: head classes do not match known ids");
  const EvalSets sets = collect_sets(split, herd);
  const std::vector<Vec> query_embs = embednet::embed_all(net, herd, sets.query_ids);

  std::vector<int> predictions(query_embs.size());
  for (std::size_t q = 0; q < query_embs.size(); ++q) {
    const Vec logits = head.logits(query_embs[q]);
    const std::size_t arg =
        std::max_element(logits.begin(), logits.end()) - logits.begin();
    predictions[q] = known_ids[arg];
  }
  return finish_eval(split, sets, predictions);
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "baseline") return {LossKind::softmax, true, "baseline"};
  return {parse_loss_kind(name), false, name};
}

SweepResult openness_sweep(const coatgen::Herd& herd,
                           const std::vector<SplitDocument>& splits,
                           const std::vector<SweepKind>& kinds,
                           const embednet::TrainConfig& config,
                           const SweepProgress& progress) {
  SweepResult result;
  for (const SweepKind& kind : kinds) {
    std::map<double, std::vector<double>> by_ratio;
    for (const SplitDocument& split : splits) {
      embednet::TrainConfig run_cfg = config;
      run_cfg.seed = seed_mix(split.openset.seed, 20, static_cast<std::uint64_t>(kind.loss));
      const embednet::TrainResult trained = embednet::train(herd, split, kind.loss, run_cfg);

      EvalResult eval;
      if (kind.closed_set) {
        eval = closed_set_baseline(trained.net, *trained.head, trained.known_ids, split, herd);
      } else {
        eval = evaluate_split(trained.net, split, herd, config.knn_k);
      }
      SweepRow row{kind.name, split.openset.openness_ratio,
                   split.openset.repetition_index, eval.accuracy,
                   eval.error_known_fraction, eval.error_unknown_fraction};
      if (progress) progress(row);
      result.rows.push_back(row);
      by_ratio[split.openset.openness_ratio].push_back(eval.accuracy);
    }
    for (const auto& [ratio, accs] : by_ratio) {
      SweepSummaryRow s;
      s.kind = kind.name;
      s.ratio = ratio;
      s.min = *std::min_element(accs.begin(), accs.end());
      s.max = *std::max_element(accs.begin(), accs.end());
      s.mean = 0.0;
      for (double a : accs) s.mean += a;
      s.mean /= static_cast<double>(accs.size());
      result.summary.push_back(s);
    }
  }
  return result;
}

}  // namespace herdmetric::openset
