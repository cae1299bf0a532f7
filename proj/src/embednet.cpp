#include "herdmetric/embednet.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

#include "herdmetric/error.hpp"
#include "herdmetric/mining.hpp"
#include "herdmetric/openset.hpp"

namespace herdmetric::embednet {

EmbedNet::EmbedNet(NetConfig cfg) : cfg_(cfg) {
  if (cfg_.input_hw < 8) throw ConfigError("EmbedNet: input size must be >= 8");
  hw_[0] = cfg_.input_hw;
  for (int s = 0; s < 3; ++s) hw_[s + 1] = (hw_[s] + 2 * 1 - 3) / 2 + 1;
  flat_ = cfg_.widths[2] * hw_[3] * hw_[3];

  std::size_t off = 0;
  auto add = [&](const std::string& name, std::vector<int> shape) {
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    tensors_.push_back({name, std::move(shape), off, count});
    off += count;
  };
  int c_in = 1;
  for (int s = 0; s < 3; ++s) {
    add("conv" + std::to_string(s + 1) + ".w", {cfg_.widths[s], c_in, 3, 3});
    add("conv" + std::to_string(s + 1) + ".b", {cfg_.widths[s]});
    c_in = cfg_.widths[s];
  }
  add("fc.w", {cfg_.embed_dim, flat_});
  add("fc.b", {cfg_.embed_dim});
  params_.assign(off, 0.0);
}

void EmbedNet::init_params(Rng rng) {
  // Kaiming-style uniform for the ReLU conv stages, LeCun-style for the
  // linear embedding layer; biases stay zero.
  for (const TensorSpec& t : tensors_) {
    if (t.name.ends_with(".b")) continue;
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < t.shape.size(); ++d)
      fan_in *= static_cast<std::size_t>(t.shape[d]);
    const double gain = t.name.starts_with("conv") ? 6.0 : 3.0;
    const double bound = std::sqrt(gain / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.count; ++i)
      params_[t.offset + i] = rng.uniform(-bound, bound);
  }
}

kernels::Conv2dShape EmbedNet::conv_shape(int stage, int n) const {
  kernels::Conv2dShape s;
  s.n = n;
  s.c_in = stage == 0 ? 1 : cfg_.widths[stage - 1];
  s.h_in = hw_[stage];
  s.w_in = hw_[stage];
  s.c_out = cfg_.widths[stage];
  s.k = 3;
  s.stride = 2;
  s.pad = 1;
  return s;
}

void EmbedNet::embed_batch(const std::vector<const Instance*>& batch, Workspace& ws) const {
  const int n = static_cast<int>(batch.size());
  const std::size_t in_sz = static_cast<std::size_t>(hw_[0]) * hw_[0];
  ws.n = n;
  ws.input.resize(in_sz * n);
  for (int i = 0; i < n; ++i) {
    if (batch[i]->grid.size() != in_sz)
      throw DimensionError("EmbedNet: instance grid must be " + std::to_string(hw_[0]) +
                           "x" + std::to_string(hw_[0]));
    std::copy(batch[i]->grid.begin(), batch[i]->grid.end(), ws.input.begin() + i * in_sz);
  }

  const double* src = ws.input.data();
  for (int s = 0; s < 3; ++s) {
    const kernels::Conv2dShape shape = conv_shape(s, n);
    const std::size_t out_sz =
        static_cast<std::size_t>(n) * shape.c_out * shape.h_out() * shape.w_out();
    ws.pre[s].resize(out_sz);
    ws.act[s].resize(out_sz);
    const TensorSpec& w = tensors_[2 * s];
    const TensorSpec& b = tensors_[2 * s + 1];
    kernels::conv2d_forward(src, params_.data() + w.offset, params_.data() + b.offset,
                            ws.pre[s].data(), shape);
    kernels::relu_forward(ws.pre[s].data(), ws.act[s].data(), out_sz);
    src = ws.act[s].data();
  }

  ws.emb.resize(static_cast<std::size_t>(n) * cfg_.embed_dim);
  const TensorSpec& fw = tensors_[6];
  const TensorSpec& fb = tensors_[7];
  kernels::fc_forward(src, params_.data() + fw.offset, params_.data() + fb.offset,
                      ws.emb.data(), n, flat_, cfg_.embed_dim);
}

Vec EmbedNet::forward_grid(const std::vector<double>& grid) const {
  Instance inst;
  inst.grid = grid;
  const Instance* p = &inst;
  Workspace ws;
  embed_batch({p}, ws);
  return Vec(ws.emb.begin(), ws.emb.end());
}

Vec EmbedNet::forward(const Instance& instance) const { return forward_grid(instance.grid); }

void EmbedNet::backward_batch(const Workspace& ws, const std::vector<double>& g_emb,
                              std::vector<double>& g_params) const {
  const int n = ws.n;
  if (g_params.size() != params_.size())
    throw DimensionError("backward_batch: gradient buffer size mismatch");
  if (g_emb.size() != static_cast<std::size_t>(n) * cfg_.embed_dim)
    throw DimensionError("backward_batch: embedding gradient size mismatch");

  const TensorSpec& fw = tensors_[6];
  const TensorSpec& fb = tensors_[7];
  kernels::fc_backward_params(g_emb.data(), ws.act[2].data(), g_params.data() + fw.offset,
                              g_params.data() + fb.offset, n, flat_, cfg_.embed_dim);

  std::vector<double> g_act(static_cast<std::size_t>(n) * flat_);
  kernels::fc_backward_input(g_emb.data(), params_.data() + fw.offset, g_act.data(), n,
                             flat_, cfg_.embed_dim);

  for (int s = 2; s >= 0; --s) {
    const kernels::Conv2dShape shape = conv_shape(s, n);
    const std::size_t out_sz =
        static_cast<std::size_t>(n) * shape.c_out * shape.h_out() * shape.w_out();
    std::vector<double> g_pre(out_sz);
    kernels::relu_backward(g_act.data(), ws.pre[s].data(), g_pre.data(), out_sz);

    const TensorSpec& w = tensors_[2 * s];
    const TensorSpec& b = tensors_[2 * s + 1];
    const double* stage_in = s == 0 ? ws.input.data() : ws.act[s - 1].data();
    kernels::conv2d_backward_params(g_pre.data(), stage_in, g_params.data() + w.offset,
                                    g_params.data() + b.offset, shape);
    if (s > 0) {
      g_act.assign(static_cast<std::size_t>(n) * shape.c_in * shape.h_in * shape.w_in, 0.0);
      kernels::conv2d_backward_input(g_pre.data(), params_.data() + w.offset, g_act.data(),
                                     shape);
    }
  }
}

ClassHead::ClassHead(int embed_dim, int num_classes) : dim_(embed_dim), classes_(num_classes) {
  if (num_classes < 1) throw ConfigError("ClassHead: need at least one class");
  params_.assign(static_cast<std::size_t>(classes_) * dim_ + classes_, 0.0);
}

void ClassHead::init_params(Rng rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(dim_));
  for (std::size_t i = 0; i < static_cast<std::size_t>(classes_) * dim_; ++i)
    params_[i] = rng.uniform(-bound, bound);
}

Vec ClassHead::logits(const Vec& embedding) const {
  if (embedding.size() != static_cast<std::size_t>(dim_))
    throw DimensionError("ClassHead: embedding dimension mismatch");
  Vec out(classes_);
  kernels::fc_forward(embedding.data(), params_.data(),
                      params_.data() + static_cast<std::size_t>(classes_) * dim_,
                      out.data(), 1, dim_, classes_);
  return out;
}

void ClassHead::logits_batch(const std::vector<double>& emb, int n,
                             std::vector<double>& out) const {
  out.resize(static_cast<std::size_t>(n) * classes_);
  kernels::fc_forward(emb.data(), params_.data(),
                      params_.data() + static_cast<std::size_t>(classes_) * dim_,
                      out.data(), n, dim_, classes_);
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, SgdState& state) {
  if (params.size() != grads.size())
    throw DimensionError("sgd_step: parameter/gradient size mismatch");
  if (state.velocity.size() != params.size()) state.velocity.assign(params.size(), 0.0);
  const double m = state.momentum_enabled ? state.momentum : 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.velocity[i] = m * state.velocity[i] + grads[i] + state.weight_decay * params[i];
    params[i] -= state.learning_rate * state.velocity[i];
  }
}

BatchGradients compute_batch_gradients(const EmbedNet& net, const ClassHead* head,
                                       const std::vector<const Instance*>& batch,
                                       const std::vector<int>& identity_labels,
                                       const std::vector<int>& class_indices,
                                       LossKind kind, const LossConfig& cfg) {
  const int n = static_cast<int>(batch.size());
  const int dim = net.config().embed_dim;
  if (loss_uses_head(kind) && head == nullptr)
    throw ConfigError("compute_batch_gradients: loss kind " + loss_kind_name(kind) +
                      " needs a classification head");

  EmbedNet::Workspace ws;
  net.embed_batch(batch, ws);

  std::vector<Vec> rows(n);
  for (int i = 0; i < n; ++i)
    rows[i].assign(ws.emb.begin() + static_cast<std::size_t>(i) * dim,
                   ws.emb.begin() + static_cast<std::size_t>(i + 1) * dim);

  const double inv_n = 1.0 / static_cast<double>(n);
  BatchGradients out;
  out.g_net.assign(net.param_count(), 0.0);
  std::vector<Vec> g_rows(n, Vec(dim, 0.0));

  // Metric term over mined hardest positives/negatives.
  double metric_sum = 0.0;
  if (loss_uses_mining(kind)) {
    mining::TripletBatch tb;
    tb.embeddings = rows;
    tb.labels = identity_labels;
    // Recover P x K structure from the label multiset.
    std::map<int, int> counts;
    for (int l : identity_labels) counts[l] += 1;
    tb.p = static_cast<int>(counts.size());
    tb.k = counts.empty() ? 0 : counts.begin()->second;

    const mining::MiningBase base =
        (kind == LossKind::rtl || kind == LossKind::softmax_rtl) ? mining::MiningBase::rtl
                                                                 : mining::MiningBase::tl;
    const auto sel = mining::batch_hard_loss(tb, cfg, base).selections;
    const double metric_scale =
        (loss_uses_head(kind) ? cfg.lambda : 1.0) * inv_n;
    for (int a = 0; a < n; ++a) {
      const Vec& xa = rows[a];
      const Vec& xp = rows[sel[a].positive];
      const Vec& xn = rows[sel[a].negative];
      Vec& ga = g_rows[a];
      Vec& gp = g_rows[sel[a].positive];
      Vec& gn = g_rows[sel[a].negative];
      switch (kind) {
        case LossKind::contrastive:
          metric_sum += contrastive(xa, xp, 0, cfg) + contrastive(xa, xn, 1, cfg);
          contrastive_grad(xa, xp, 0, cfg, ga, gp, metric_scale);
          contrastive_grad(xa, xn, 1, cfg, ga, gn, metric_scale);
          break;
        case LossKind::tl:
        case LossKind::softmax_tl:
          metric_sum += triplet(xa, xp, xn, cfg);
          triplet_grad(xa, xp, xn, cfg, ga, gp, gn, metric_scale);
          break;
        case LossKind::rtl:
        case LossKind::softmax_rtl:
          metric_sum += reciprocal_triplet(xa, xp, xn, cfg);
          reciprocal_triplet_grad(xa, xp, xn, cfg, ga, gp, gn, metric_scale);
          break;
        default:
          break;
      }
    }
  }

  // Cross-entropy term through the head.
  double ce_sum = 0.0;
  if (loss_uses_head(kind)) {
    const int classes = head->classes();
    std::vector<double> logits;
    head->logits_batch(ws.emb, n, logits);
    std::vector<double> g_logits(static_cast<std::size_t>(n) * classes, 0.0);
    for (int i = 0; i < n; ++i) {
      Vec row_logits(logits.begin() + static_cast<std::size_t>(i) * classes,
                     logits.begin() + static_cast<std::size_t>(i + 1) * classes);
      Vec g_row(classes, 0.0);
      ce_sum += softmax_ce_grad(row_logits, static_cast<std::size_t>(class_indices[i]),
                                g_row, inv_n);
      std::copy(g_row.begin(), g_row.end(),
                g_logits.begin() + static_cast<std::size_t>(i) * classes);
    }
    out.g_head.assign(head->params().size(), 0.0);
    kernels::fc_backward_params(g_logits.data(), ws.emb.data(), out.g_head.data(),
                                out.g_head.data() + static_cast<std::size_t>(classes) * dim,
                                n, dim, classes);
    std::vector<double> g_emb_from_head(static_cast<std::size_t>(n) * dim);
    kernels::fc_backward_input(g_logits.data(), head->params().data(),
                               g_emb_from_head.data(), n, dim, classes);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim; ++j)
        g_rows[i][j] += g_emb_from_head[static_cast<std::size_t>(i) * dim + j];
  }

  switch (kind) {
    case LossKind::contrastive:
    case LossKind::tl:
    case LossKind::rtl:
      out.loss = metric_sum * inv_n;
      break;
    case LossKind::softmax:
      out.loss = ce_sum * inv_n;
      break;
    case LossKind::softmax_tl:
    case LossKind::softmax_rtl:
      out.loss = (ce_sum + cfg.lambda * metric_sum) * inv_n;
      break;
  }

  std::vector<double> g_emb(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i)
    std::copy(g_rows[i].begin(), g_rows[i].end(),
              g_emb.begin() + static_cast<std::size_t>(i) * dim);
  net.backward_batch(ws, g_emb, out.g_net);
  return out;
}

std::vector<Vec> embed_all(const EmbedNet& net, const coatgen::Herd& herd,
                           const std::vector<int>& instance_ids) {
  std::vector<const Instance*> batch;
  batch.reserve(instance_ids.size());
  for (int id : instance_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= herd.instances.size())
      throw EvaluationError("embed_all: instance id " + std::to_string(id) +
                            " outside the herd");
    batch.push_back(&herd.instances[id]);
  }
  EmbedNet::Workspace ws;
  net.embed_batch(batch, ws);
  const int dim = net.config().embed_dim;
  std::vector<Vec> out(instance_ids.size());
  for (std::size_t i = 0; i < instance_ids.size(); ++i)
    out[i].assign(ws.emb.begin() + i * dim, ws.emb.begin() + (i + 1) * dim);
  return out;
}

namespace {

double validation_accuracy(const EmbedNet& net, const coatgen::Herd& herd,
                           const dataset::SplitDocument& split, int knn_k) {
  std::vector<int> gallery_ids, gallery_labels, query_ids, query_labels;
  for (const dataset::ClassSplit& cs : split.classes) {
    const bool known = std::binary_search(split.openset.known.begin(),
                                          split.openset.known.end(), cs.identity_id);
    if (!known) continue;
    for (int i : cs.train) {
      gallery_ids.push_back(i);
      gallery_labels.push_back(cs.identity_id);
    }
    for (int i : cs.val) {
      query_ids.push_back(i);
      query_labels.push_back(cs.identity_id);
    }
  }
  if (query_ids.empty()) return 0.0;

  openset::Gallery gallery;
  gallery.embeddings = embed_all(net, herd, gallery_ids);
  gallery.labels = gallery_labels;
  gallery.membership.assign(gallery_ids.size(), openset::Membership::train);

  const std::vector<Vec> queries = embed_all(net, herd, query_ids);
  int correct = 0;
  for (std::size_t q = 0; q < queries.size(); ++q)
    if (openset::knn_classify(gallery, queries[q], knn_k) == query_labels[q]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(queries.size());
}

}  // namespace

TrainResult train(const coatgen::Herd& herd, const dataset::SplitDocument& split,
                  LossKind kind, const TrainConfig& config) {
  if (config.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (split.openset.known.size() < 2)
    throw ConfigError("train: split needs at least 2 known classes");

  TrainResult result;
  result.net = EmbedNet(config.net);
  result.net.init_params(Rng(seed_mix(config.seed, 10)));
  result.known_ids = split.openset.known;

  std::map<int, int> class_index;
  for (std::size_t c = 0; c < result.known_ids.size(); ++c)
    class_index[result.known_ids[c]] = static_cast<int>(c);

  if (loss_uses_head(kind)) {
    result.head.emplace(config.net.embed_dim, static_cast<int>(result.known_ids.size()));
    result.head->init_params(Rng(seed_mix(config.seed, 11)));
  }

  // Training pool: train instances of known classes only.
  std::map<int, std::vector<int>> pool;
  std::size_t pool_size = 0;
  for (const dataset::ClassSplit& cs : split.classes) {
    if (!class_index.count(cs.identity_id)) continue;
    pool[cs.identity_id] = cs.train;
    pool_size += cs.train.size();
  }

  const int p_eff = std::min<int>(config.batch_p, static_cast<int>(pool.size()));
  result.effective_p = p_eff;
  result.momentum_enabled = !loss_is_rtl_family(kind);

  SgdState net_state;
  net_state.learning_rate = config.learning_rate;
  net_state.momentum = config.momentum;
  net_state.weight_decay = config.weight_decay;
  net_state.momentum_enabled = result.momentum_enabled;
  net_state.velocity.assign(result.net.param_count(), 0.0);

  SgdState head_state = net_state;
  if (result.head) head_state.velocity.assign(result.head->params().size(), 0.0);

  const int batch_size = p_eff * config.batch_k;
  const int batches_per_epoch =
      std::max<int>(1, static_cast<int>(pool_size) / std::max(1, batch_size));

  Rng batch_rng(seed_mix(config.seed, 12));
  result.pocket.best_net_params = result.net.params();
  if (result.head) result.pocket.best_head_params = result.head->params();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0.0;
    for (int b = 0; b < batches_per_epoch; ++b) {
      const mining::BatchIndices idx =
          mining::sample_batch(pool, p_eff, config.batch_k, batch_rng);
      std::vector<const Instance*> batch;
      std::vector<int> classes;
      batch.reserve(idx.instance_ids.size());
      for (std::size_t i = 0; i < idx.instance_ids.size(); ++i) {
        batch.push_back(&herd.instances[idx.instance_ids[i]]);
        classes.push_back(class_index.at(idx.labels[i]));
      }
      BatchGradients grads =
          compute_batch_gradients(result.net, result.head ? &*result.head : nullptr,
                                  batch, idx.labels, classes, kind, config.loss);
      if (!std::isfinite(grads.loss))
        throw InstabilityError("train: non-finite loss at epoch " + std::to_string(epoch) +
                               ", batch " + std::to_string(b));
      loss_sum += grads.loss;
      sgd_step(result.net.params(), grads.g_net, net_state);
      if (result.head) sgd_step(result.head->params(), grads.g_head, head_state);
    }

    const double val_acc = validation_accuracy(result.net, herd, split, config.knn_k);
    if (val_acc > result.pocket.best_val_accuracy) {
      result.pocket.best_val_accuracy = val_acc;
      result.pocket.best_epoch = epoch;
      result.pocket.best_net_params = result.net.params();
      if (result.head) result.pocket.best_head_params = result.head->params();
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back({epoch, loss_sum / batches_per_epoch, val_acc, wall});
  }

  // Pocket: ship the weights that did best on validation.
  result.net.params() = result.pocket.best_net_params;
  if (result.head) result.head->params() = result.pocket.best_head_params;
  return result;
}

}  // namespace herdmetric::embednet
