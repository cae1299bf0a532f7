#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "herdmetric/coatgen.hpp"
#include "herdmetric/dataset.hpp"
#include "herdmetric/kernels.hpp"
#include "herdmetric/linalg.hpp"
#include "herdmetric/losses.hpp"
#include "herdmetric/rng.hpp"

namespace herdmetric::embednet {

using coatgen::Instance;

struct NetConfig {
  int input_hw = coatgen::kInstanceSize;
  std::array<int, 3> widths = {8, 16, 32};
  int embed_dim = 128;
};

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

// Three 3x3 stride-2 conv stages with ReLU, flatten, one fully connected
// layer to the embedding. Parameters live in one flat array; tensors()
// names the slices.
class EmbedNet {
 public:
  explicit EmbedNet(NetConfig cfg = {});

  const NetConfig& config() const { return cfg_; }
  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  // Fan-in-scaled uniform weights, zero biases.
  void init_params(Rng rng);

  int stage_hw(int stage) const { return hw_[stage]; }
  int flat_features() const { return flat_; }

  Vec forward(const Instance& instance) const;
  Vec forward_grid(const std::vector<double>& grid) const;

  // Forward a batch keeping every intermediate needed by backward.
  struct Workspace {
    int n = 0;
    std::vector<double> input;
    std::array<std::vector<double>, 3> pre;   // conv outputs before ReLU
    std::array<std::vector<double>, 3> act;   // after ReLU
    std::vector<double> emb;                  // n x embed_dim
  };
  void embed_batch(const std::vector<const Instance*>& batch, Workspace& ws) const;

  // Accumulates d(objective)/d(params) into g_params given d/d(embeddings).
  void backward_batch(const Workspace& ws, const std::vector<double>& g_emb,
                      std::vector<double>& g_params) const;

 private:
  kernels::Conv2dShape conv_shape(int stage, int n) const;

  NetConfig cfg_;
  std::array<int, 4> hw_{};  // input and per-stage spatial sizes
  int flat_ = 0;
  std::vector<TensorSpec> tensors_;
  std::vector<double> params_;
};

// Linear classification head on the embedding; only used while training the
// softmax-bearing losses and by the closed-set baseline.
class ClassHead {
 public:
  ClassHead(int embed_dim, int num_classes);
  int classes() const { return classes_; }
  int embed_dim() const { return dim_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  void init_params(Rng rng);

  Vec logits(const Vec& embedding) const;
  void logits_batch(const std::vector<double>& emb, int n, std::vector<double>& out) const;

 private:
  int dim_;
  int classes_;
  std::vector<double> params_;  // W (classes x dim) then bias (classes)
};

struct SgdState {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  bool momentum_enabled = true;
  std::vector<double> velocity;
};

// v <- m*v + g + wd*p; p <- p - lr*v. With momentum disabled the update is
// p <- p - lr*(g + wd*p).
void sgd_step(std::vector<double>& params, const std::vector<double>& grads, SgdState& state);

struct PocketState {
  double best_val_accuracy = -1.0;
  int best_epoch = -1;
  std::vector<double> best_net_params;
  std::vector<double> best_head_params;
};

// One optimization step's worth of gradients for the chosen loss over a
// mined P x K batch. The objective is normalized by the batch size.
struct BatchGradients {
  double loss = 0.0;
  std::vector<double> g_net;
  std::vector<double> g_head;
};
BatchGradients compute_batch_gradients(const EmbedNet& net, const ClassHead* head,
                                       const std::vector<const Instance*>& batch,
                                       const std::vector<int>& identity_labels,
                                       const std::vector<int>& class_indices,
                                       LossKind kind, const LossConfig& cfg);

struct TrainConfig {
  int epochs = 100;
  int batch_p = 8;
  int batch_k = 2;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  LossConfig loss;
  int knn_k = 5;
  std::uint64_t seed = 0;
  NetConfig net;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  EmbedNet net;
  std::optional<ClassHead> head;
  PocketState pocket;
  std::vector<EpochRow> log;
  bool momentum_enabled = true;
  int effective_p = 0;
  std::vector<int> known_ids;  // class index -> identity id
};

// Trains on the split's known classes; after every epoch the known-class
// validation instances are classified by kNN against the known-class
// training embeddings and the best-performing weights are kept (pocket).
// Momentum is disabled automatically for the reciprocal family.
TrainResult train(const coatgen::Herd& herd, const dataset::SplitDocument& split,
                  LossKind kind, const TrainConfig& config);

// Embeds a list of instances (batched, parallel across instances).
std::vector<Vec> embed_all(const EmbedNet& net, const coatgen::Herd& herd,
                           const std::vector<int>& instance_ids);

}  // namespace herdmetric::embednet
