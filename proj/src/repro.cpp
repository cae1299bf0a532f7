#include "herdmetric/repro.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <ctime>
#include <map>

#include "herdmetric/cli.hpp"
#include "herdmetric/detgeom.hpp"
#include "herdmetric/error.hpp"
#include "herdmetric/io.hpp"
#include "herdmetric/linalg.hpp"
#include "herdmetric/mining.hpp"
#include "herdmetric/svgplot.hpp"

namespace herdmetric::repro {

namespace {

double wall_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------- gradients

struct FdCase {
  embednet::EmbedNet net;
  std::optional<embednet::ClassHead> head;
  std::vector<coatgen::Instance> storage;
  std::vector<const coatgen::Instance*> batch;
  std::vector<int> identity_labels;
  std::vector<int> class_indices;
  LossConfig loss_cfg;
};

// Random tiny configuration; returns false when the draw lands too close to
// a hinge kink, a distance singularity, a mining-selection tie, or a ReLU
// kink, where finite differences are meaningless.
bool make_fd_case(LossKind kind, Rng& rng, FdCase& out) {
  embednet::NetConfig ncfg;
  ncfg.input_hw = 16;
  ncfg.widths = {2, 2, 2};
  ncfg.embed_dim = 8;
  out.net = embednet::EmbedNet(ncfg);
  out.net.init_params(Rng(rng.next_u64()));

  out.loss_cfg.margin = rng.uniform(0.5, 2.0);
  out.loss_cfg.lambda = rng.uniform() < 0.5 ? 0.01 : 0.3;
  out.loss_cfg.epsilon = 1e-8;

  const int p = 2, k = 2, n = p * k;
  out.storage.assign(n, {});
  out.batch.clear();
  out.identity_labels.clear();
  out.class_indices.clear();
  for (int i = 0; i < n; ++i) {
    out.storage[i].grid.resize(static_cast<std::size_t>(ncfg.input_hw) * ncfg.input_hw);
    for (double& c : out.storage[i].grid) c = rng.uniform();
    out.identity_labels.push_back(i / k);
    out.class_indices.push_back(i / k);
  }
  for (int i = 0; i < n; ++i) out.batch.push_back(&out.storage[i]);

  out.head.reset();
  if (loss_uses_head(kind)) {
    out.head.emplace(ncfg.embed_dim, p);
    out.head->init_params(Rng(rng.next_u64()));
  }

  embednet::EmbedNet::Workspace ws;
  out.net.embed_batch(out.batch, ws);
  for (int s = 0; s < 3; ++s)
    for (double pre : ws.pre[s])
      if (std::abs(pre) < 1e-4) return false;

  std::vector<Vec> rows(n);
  for (int i = 0; i < n; ++i)
    rows[i].assign(ws.emb.begin() + static_cast<std::size_t>(i) * ncfg.embed_dim,
                   ws.emb.begin() + static_cast<std::size_t>(i + 1) * ncfg.embed_dim);

  if (loss_uses_mining(kind)) {
    std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        d[i][j] = euclidean_distance(rows[i], rows[j]);
        if (d[i][j] < 1e-3) return false;
      }
    for (int a = 0; a < n; ++a) {
      double dp = -1, dp2 = -1, dn = 1e30, dn2 = 1e30;
      for (int j = 0; j < n; ++j) {
        if (j == a) continue;
        if (out.identity_labels[j] == out.identity_labels[a]) {
          if (d[a][j] > dp) {
            dp2 = dp;
            dp = d[a][j];
          } else {
            dp2 = std::max(dp2, d[a][j]);
          }
        } else if (d[a][j] < dn) {
          dn2 = dn;
          dn = d[a][j];
        } else {
          dn2 = std::min(dn2, d[a][j]);
        }
      }
      if (dp2 >= 0 && dp - dp2 < 1e-3) return false;  // positive selection tie
      if (dn2 < 1e29 && dn2 - dn < 1e-3) return false; // negative selection tie
      if (kind == LossKind::tl || kind == LossKind::softmax_tl) {
        if (std::abs(dp - dn + out.loss_cfg.margin) < 1e-3) return false;
      }
      if (kind == LossKind::contrastive) {
        if (std::abs(out.loss_cfg.margin - dn) < 1e-3) return false;
      }
    }
  }
  return true;
}

double fd_objective(FdCase& c, LossKind kind) {
  return embednet::compute_batch_gradients(c.net, c.head ? &*c.head : nullptr, c.batch,
                                           c.identity_labels, c.class_indices, kind,
                                           c.loss_cfg)
      .loss;
}

double max_rel_err_fd(FdCase& c, LossKind kind) {
  const embednet::BatchGradients grads = embednet::compute_batch_gradients(
      c.net, c.head ? &*c.head : nullptr, c.batch, c.identity_labels, c.class_indices,
      kind, c.loss_cfg);
  const double h = 1e-5;
  double worst = 0.0;

  auto check_params = [&](std::vector<double>& params, const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = fd_objective(c, kind);
      params[i] = saved - h;
      const double dn = fd_objective(c, kind);
      params[i] = saved;
      const double fd = (up - dn) / (2 * h);
      const double err =
          std::abs(analytic[i] - fd) / std::max({std::abs(analytic[i]), std::abs(fd), 1e-6});
      worst = std::max(worst, err);
    }
  };
  check_params(c.net.params(), grads.g_net);
  if (c.head) check_params(c.head->params(), grads.g_head);
  return worst;
}

}  // namespace

CriterionResult check_gradients(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const LossKind kinds[] = {LossKind::contrastive, LossKind::tl,         LossKind::rtl,
                            LossKind::softmax,     LossKind::softmax_tl, LossKind::softmax_rtl};
  const int per_kind = 17;  // 6 * 17 = 102 configurations
  Rng rng(seed);
  double worst = 0.0;
  int checked = 0;
  for (LossKind kind : kinds) {
    for (int i = 0; i < per_kind; ++i) {
      FdCase c;
      int attempts = 0;
      while (!make_fd_case(kind, rng, c)) {
        if (++attempts > 200)
          throw EvaluationError("check_gradients: cannot find a kink-free configuration");
      }
      worst = std::max(worst, max_rel_err_fd(c, kind));
      ++checked;
    }
  }
  const double wall = wall_since(t0);
  CriterionResult r;
  r.index = 1;
  r.name = "gradient correctness (analytic vs central differences)";
  r.bound = "max rel err <= 1e-4 over >= 100 configs, < 60 s";
  r.measured = fmt("max rel err %.3g over %d configs, %.1f s", worst, checked, wall);
  r.pass = worst <= 1e-4 && checked >= 100 && wall < 60.0;
  r.wall_seconds = wall;
  return r;
}

CriterionResult check_mining_oracle(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(seed);
  LossConfig cfg;
  int mismatches = 0;
  const int batches = 1000;
  for (int b = 0; b < batches; ++b) {
    mining::TripletBatch batch;
    batch.p = 2 + static_cast<int>(rng.uniform_int(7));  // 2..8
    batch.k = 2 + static_cast<int>(rng.uniform_int(3));  // 2..4
    const int dim = 4 + static_cast<int>(rng.uniform_int(13));
    std::vector<int> labels;
    for (int c = 0; c < batch.p; ++c)
      for (int i = 0; i < batch.k; ++i) labels.push_back(c);
    rng.shuffle(labels);
    batch.labels = labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      Vec v(dim);
      for (double& x : v) x = rng.uniform(-1.0, 1.0);
      batch.embeddings.push_back(std::move(v));
    }
    const auto fast = mining::batch_hard_loss(batch, cfg, mining::MiningBase::tl).selections;
    const auto oracle = mining::brute_force_hard(batch);
    for (std::size_t a = 0; a < fast.size(); ++a)
      if (fast[a].positive != oracle[a].positive || fast[a].negative != oracle[a].negative)
        ++mismatches;
  }
  const double wall = wall_since(t0);
  CriterionResult r;
  r.index = 2;
  r.name = "batch-hard selections match the brute-force oracle";
  r.bound = "0 mismatches on 1000 random batches, < 30 s";
  r.measured = fmt("%d mismatches, %.1f s", mismatches, wall);
  r.pass = mismatches == 0 && wall < 30.0;
  r.wall_seconds = wall;
  return r;
}

CriterionResult check_detection_math() {
  using namespace detgeom;
  const auto t0 = std::chrono::steady_clock::now();
  auto track = [](double got, double want, double tol) {
    return std::abs(got - want) <= tol;
  };
  bool ok = true;

  ok &= track(iou({0, 0, 2, 2}, {1, 1, 3, 3}), 1.0 / 7.0, 1e-9);
  ok &= track(smooth_l1(0.5), 0.125, 1e-12);
  ok &= track(smooth_l1(3.0), 2.5, 1e-12);
  ok &= track(smooth_l1(1.0), 0.5, 1e-12);

  const FocalParams fp{2.0, 0.25, 1.0};
  ok &= track(focal_loss(0.9, 1, fp), 0.25 * 0.01 * -std::log(0.9), 1e-9);

  const Anchor anchor{{0, 0, 10, 10}};
  const Offsets t = encode_offsets({1, 2, 11, 12}, anchor);
  ok &= track(t[0], 0.1, 1e-9);
  ok &= track(t[1], 0.2, 1e-9);
  ok &= track(t[2], 0.1, 1e-9);
  ok &= track(t[3], 0.2, 1e-9);
  const Box back = decode_offsets(t, anchor);
  ok &= track(back.x1, 1, 1e-12) && track(back.y1, 2, 1e-12) &&
        track(back.x2, 11, 1e-12) && track(back.y2, 12, 1e-12);

  // A overlaps B, B overlaps C, A and C disjoint -> {A, C} survives.
  {
    const std::vector<Detection> dets = {{{0, 0, 10, 10}, 0.9},
                                         {{5, 0, 15, 10}, 0.8},
                                         {{10.5, 0, 20.5, 10}, 0.7}};
    const auto kept = nms(dets, 0.28);
    ok &= kept.size() == 2 && kept[0].confidence == 0.9 && kept[1].confidence == 0.7;
  }

  // Focal loss with gamma=0 and alpha_t=1 is plain cross-entropy.
  for (int i = 1; i <= 1000; ++i) {
    const double p = i / 1001.0;
    const FocalParams ce_pos{0.0, 1.0, 1.0};
    const FocalParams ce_neg{0.0, 0.0, 1.0};
    ok &= track(focal_loss(p, 1, ce_pos), -std::log(p), 1e-12);
    ok &= track(focal_loss(p, -1, ce_neg), -std::log(1 - p), 1e-12);
  }

  // Hand PR trace: confidences 0.9 TP, 0.8 FP, 0.7 TP over 2 ground truths.
  {
    std::vector<ImageAnnotations> gts(1), dets(1);
    gts[0].image_id = dets[0].image_id = "img";
    gts[0].boxes = {{{0, 0, 10, 10}, 1.0}, {{20, 20, 30, 30}, 1.0}};
    dets[0].boxes = {{{0, 0, 10, 10}, 0.9}, {{40, 40, 50, 50}, 0.8}, {{20, 20, 30, 30}, 0.7}};
    ok &= track(average_precision(dets, gts, 0.5, 0.5), 5.0 / 6.0, 1e-9);
  }

  const double wall = wall_since(t0);
  CriterionResult r;
  r.index = 3;
  r.name = "detection math reproduces the hand-worked values";
  r.bound = "hand cases to 1e-9, cross-entropy grid to 1e-12, AP = 5/6, < 10 s";
  r.measured = fmt("%s, %.1f s", ok ? "all exact" : "mismatch", wall);
  r.pass = ok && wall < 10.0;
  r.wall_seconds = wall;
  return r;
}

namespace {

double known_fraction(const dataset::SplitDocument& doc) {
  const double total = static_cast<double>(doc.classes.size());
  return static_cast<double>(doc.openset.known.size()) / total;
}

std::map<std::pair<std::string, double>, double> summary_means(
    const openset::SweepResult& res) {
  std::map<std::pair<std::string, double>, double> means;
  for (const openset::SweepSummaryRow& s : res.summary) means[{s.kind, s.ratio}] = s.mean;
  return means;
}

}  // namespace

ReproReport run_repro(const ReproOptions& options) {
  ReproReport report;
  fs::create_directories(options.out_dir);

  report.criteria.push_back(check_gradients());
  report.criteria.push_back(check_mining_oracle());
  report.criteria.push_back(check_detection_math());

  // generate
  auto t0 = std::chrono::steady_clock::now();
  const coatgen::Herd herd =
      coatgen::generate_herd(options.identities, options.per_identity, options.seed);
  io::write_herd(options.out_dir / "herd", herd, false);

  // split + sweep, twice for the determinism criterion
  embednet::TrainConfig train_cfg = options.train;
  train_cfg.epochs = options.epochs;

  cli::SweepConfig scfg;
  scfg.out_dir = options.out_dir / "sweep";
  scfg.kinds = options.kinds;
  scfg.ratios = options.ratios;
  scfg.reps = options.reps;
  scfg.seed = options.seed;
  scfg.train = train_cfg;
  scfg.quiet = true;

  const std::clock_t cpu0 = std::clock();
  const openset::SweepResult sweep = cli::run_sweep(herd, scfg);
  const double sweep_cpu = static_cast<double>(std::clock() - cpu0) / CLOCKS_PER_SEC;
  const double sweep_wall = wall_since(t0);

  cli::SweepConfig scfg2 = scfg;
  scfg2.out_dir = options.out_dir / "sweep_check";
  cli::run_sweep(herd, scfg2);

  // walkthrough artifacts: one explicit training run plus the projection plot
  const auto docs =
      dataset::make_split_documents(herd, options.ratios, options.reps, options.seed);
  {
    const dataset::SplitDocument* demo = nullptr;
    for (const auto& d : docs)
      if (std::abs(d.openset.openness_ratio - 0.5) < 1e-9 && d.openset.repetition_index == 0)
        demo = &d;
    if (demo == nullptr) demo = &docs.front();
    embednet::TrainConfig demo_cfg = train_cfg;
    demo_cfg.seed = seed_mix(demo->openset.seed, 20,
                             static_cast<std::uint64_t>(LossKind::softmax_rtl));
    const embednet::TrainResult trained =
        embednet::train(herd, *demo, LossKind::softmax_rtl, demo_cfg);
    const fs::path demo_dir = options.out_dir / "train_demo";
    fs::create_directories(demo_dir);
    io::write_checkpoint(demo_dir / "checkpoint.bin", trained.net,
                         trained.head ? &*trained.head : nullptr, trained.known_ids);
    io::write_epoch_log(demo_dir / "epochs.csv", trained.log);

    std::vector<int> ids;
    std::vector<int> labels;
    for (const dataset::ClassSplit& cs : demo->classes) {
      for (int i : cs.train) {
        ids.push_back(i);
        labels.push_back(cs.identity_id);
      }
      for (int i : cs.val) {
        ids.push_back(i);
        labels.push_back(cs.identity_id);
      }
    }
    const auto projected = pca_project_2d(embednet::embed_all(trained.net, herd, ids));
    std::map<int, svgplot::ScatterGroup> groups;
    for (std::size_t i = 0; i < projected.size(); ++i) {
      auto& g = groups[labels[i]];
      if (g.points.empty()) {
        g.label = "id " + std::to_string(labels[i]);
        g.highlight = std::binary_search(demo->openset.unknown.begin(),
                                         demo->openset.unknown.end(), labels[i]);
      }
      g.points.push_back(projected[i]);
    }
    std::vector<svgplot::ScatterGroup> ordered;
    for (auto& [id, g] : groups) ordered.push_back(std::move(g));
    io::write_text(options.out_dir / "embedding.svg",
                   svgplot::scatter_plot(ordered, "embedding projection (hollow = unknown)"));
  }

  const auto means = summary_means(sweep);
  auto mean_of = [&](const std::string& kind, double ratio) {
    const auto it = means.find({kind, ratio});
    if (it == means.end())
      throw EvaluationError("repro: sweep summary is missing " + kind + " at ratio " +
                            std::to_string(ratio));
    return it->second;
  };

  // criterion 4: closed-set ceiling and monotone decline
  {
    const auto t4 = std::chrono::steady_clock::now();
    bool ceiling_ok = true;
    double worst_excess = 0.0;
    std::map<double, double> frac_by_ratio;
    for (const auto& doc : docs) frac_by_ratio[doc.openset.openness_ratio] = known_fraction(doc);
    for (const openset::SweepRow& row : sweep.rows) {
      if (row.kind != "baseline") continue;
      const double frac = frac_by_ratio.at(row.ratio);
      if (row.accuracy > frac + 1e-12) {
        ceiling_ok = false;
        worst_excess = std::max(worst_excess, row.accuracy - frac);
      }
    }
    bool monotone = true;
    std::vector<double> ratios_sorted = options.ratios;
    std::sort(ratios_sorted.begin(), ratios_sorted.end());
    for (std::size_t i = 0; i + 1 < ratios_sorted.size(); ++i)
      if (!(mean_of("baseline", ratios_sorted[i + 1]) < mean_of("baseline", ratios_sorted[i])))
        monotone = false;
    CriterionResult r;
    r.index = 4;
    r.name = "closed-set ceiling and monotone decline with openness";
    r.bound = "baseline accuracy <= known fraction on every split; means strictly decrease";
    r.measured = fmt("ceiling %s (worst excess %.3g); monotone %s",
                     ceiling_ok ? "holds" : "violated", worst_excess,
                     monotone ? "yes" : "no");
    r.pass = ceiling_ok && monotone;
    r.wall_seconds = wall_since(t4);
    report.criteria.push_back(r);
  }

  // criterion 5: open-set superiority at 0.5
  {
    const double rtl = mean_of("softmax-rtl", 0.5);
    const double base = mean_of("baseline", 0.5);
    const double gap_pct = 100.0 * (rtl - base);
    CriterionResult r;
    r.index = 5;
    r.name = "open-set superiority of softmax-rtl at openness 0.5";
    r.bound = fmt("gap >= %.0f points, accuracy >= %.0f%%, sweep <= 1200 CPU s",
                  options.min_gap_pct, options.min_rtl_accuracy_pct);
    r.measured = fmt("softmax-rtl %.2f%%, baseline %.2f%%, gap %.2f points, %.0f CPU s",
                     100.0 * rtl, 100.0 * base, gap_pct, sweep_cpu);
    r.pass = gap_pct >= options.min_gap_pct &&
             100.0 * rtl >= options.min_rtl_accuracy_pct && sweep_cpu <= 1200.0;
    r.wall_seconds = sweep_wall;
    report.criteria.push_back(r);
  }

  // criterion 6: combined loss at least matches plain TL per ratio
  {
    const auto t6 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (double ratio : options.ratios) {
      const double rtl = mean_of("softmax-rtl", ratio);
      const double tl = mean_of("tl", ratio);
      if (100.0 * rtl < 100.0 * tl - options.tl_tolerance_pct) ok = false;
      detail += fmt("r%.2f: %.1f vs %.1f; ", ratio, 100.0 * rtl, 100.0 * tl);
    }
    CriterionResult r;
    r.index = 6;
    r.name = "softmax-rtl mean >= plain tl mean at every ratio";
    r.bound = fmt("within %.0f points", options.tl_tolerance_pct);
    r.measured = detail;
    r.pass = ok;
    r.wall_seconds = wall_since(t6);
    report.criteria.push_back(r);
  }

  // criterion 7: byte-identical result CSVs across the two sweep runs
  {
    const auto t7 = std::chrono::steady_clock::now();
    const std::string a1 = io::read_text(options.out_dir / "sweep" / "results.csv");
    const std::string a2 = io::read_text(options.out_dir / "sweep_check" / "results.csv");
    const std::string b1 = io::read_text(options.out_dir / "sweep" / "summary.csv");
    const std::string b2 = io::read_text(options.out_dir / "sweep_check" / "summary.csv");
    CriterionResult r;
    r.index = 7;
    r.name = "determinism: repeated sweep writes byte-identical CSVs";
    r.bound = "results.csv and summary.csv identical";
    const bool same = a1 == a2 && b1 == b2;
    r.measured = same ? "identical" : "differs";
    r.pass = same;
    r.wall_seconds = wall_since(t7);
    report.criteria.push_back(r);
  }

  // criterion 8: protocol fidelity at the reference population size
  {
    const auto t8 = std::chrono::steady_clock::now();
    std::vector<std::pair<int, coatgen::SourceTag>> identities46;
    for (int i = 0; i < 46; ++i)
      identities46.emplace_back(i, static_cast<coatgen::SourceTag>(i % 3));
    const auto splits46 = dataset::make_openset_splits(identities46, {0.5}, 1, options.seed);
    const std::size_t unknown46 = splits46.at(0).unknown.size();

    bool tests_ok = true;
    for (const auto& cs : docs.front().classes)
      if (cs.test.size() != 10) tests_ok = false;

    CriterionResult r;
    r.index = 8;
    r.name = "protocol fidelity: 46 identities at 0.5 and 10-test splits";
    r.bound = "|unknown| = 23; every class has exactly 10 test instances";
    r.measured = fmt("|unknown| = %zu; 10-test %s", unknown46, tests_ok ? "holds" : "violated");
    r.pass = unknown46 == 23 && tests_ok;
    r.wall_seconds = wall_since(t8);
    report.criteria.push_back(r);
  }

  io::write_text(options.out_dir / "report.md", report_markdown(report));
  return report;
}

std::string report_markdown(const ReproReport& report) {
  std::string md = "# herdmetric reproduction report\n\n";
  md += "| # | criterion | bound | measured | pass | wall (s) |\n";
  md += "|---|-----------|-------|----------|------|----------|\n";
  for (const CriterionResult& c : report.criteria) {
    md += fmt("| %d | %s | %s | %s | %s | %.1f |\n", c.index, c.name.c_str(),
              c.bound.c_str(), c.measured.c_str(), c.pass ? "yes" : "NO", c.wall_seconds);
  }
  md += fmt("\noverall: %s\n", report.all_pass() ? "PASS" : "FAIL");
  return md;
}

}  // namespace herdmetric::repro
