#include "herdmetric/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "herdmetric/error.hpp"
#include "herdmetric/io.hpp"
#include "herdmetric/svgplot.hpp"

namespace herdmetric::cli {

using nlohmann::json;

namespace {

void write_config_json(const fs::path& dir, const json& j) {
  io::write_text(dir / "config.json", j.dump(2) + "\n");
}

json train_config_json(const embednet::TrainConfig& t) {
  return json{{"epochs", t.epochs},
              {"batch_p", t.batch_p},
              {"batch_k", t.batch_k},
              {"learning_rate", t.learning_rate},
              {"momentum", t.momentum},
              {"weight_decay", t.weight_decay},
              {"margin", t.loss.margin},
              {"lambda", t.loss.lambda},
              {"epsilon", t.loss.epsilon},
              {"knn_k", t.knn_k},
              {"seed", t.seed},
              {"input_hw", t.net.input_hw},
              {"widths", t.net.widths},
              {"embed_dim", t.net.embed_dim}};
}

}  // namespace

void cmd_generate(const GenerateConfig& cfg) {
  const coatgen::Herd herd =
      coatgen::generate_herd(cfg.identities, cfg.per_identity, cfg.seed, cfg.gs);
  io::write_herd(cfg.out_dir, herd, cfg.export_patterns);
  write_config_json(cfg.out_dir,
                    json{{"command", "generate"},
                         {"identities", cfg.identities},
                         {"per_identity", cfg.per_identity},
                         {"seed", cfg.seed},
                         {"export_patterns", cfg.export_patterns},
                         {"gray_scott",
                          {{"Du", cfg.gs.Du}, {"Dv", cfg.gs.Dv}, {"F", cfg.gs.F},
                           {"k", cfg.gs.k}, {"dt", cfg.gs.dt}, {"steps", cfg.gs.steps},
                           {"sim_size", cfg.gs.sim_size},
                           {"init_patches", cfg.gs.init_patches},
                           {"init_noise", cfg.gs.init_noise}}}});
  std::cout << "wrote " << herd.instances.size() << " instances for " << herd.num_identities
            << " identities to " << cfg.out_dir.string() << "\n";
}

std::string split_filename(int ratio_index, int repetition) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "split_ri%02d_rep%02d.json", ratio_index, repetition);
  return buf;
}

void cmd_split(const SplitConfig& cfg) {
  const coatgen::Herd herd = io::load_herd(cfg.herd);
  const auto docs = dataset::make_split_documents(herd, cfg.ratios, cfg.reps, cfg.seed);
  fs::create_directories(cfg.out_dir);
  for (const dataset::SplitDocument& doc : docs)
    io::write_split(cfg.out_dir / split_filename(doc.openset.ratio_index,
                                                 doc.openset.repetition_index),
                    doc);
  write_config_json(cfg.out_dir, json{{"command", "split"},
                                      {"herd", cfg.herd.string()},
                                      {"ratios", cfg.ratios},
                                      {"reps", cfg.reps},
                                      {"seed", cfg.seed}});
  std::cout << "wrote " << docs.size() << " split files to " << cfg.out_dir.string() << "\n";
}

dataset::SplitDocument resolve_split(const fs::path& file_or_dir,
                                     std::optional<double> ratio, std::optional<int> rep) {
  if (fs::is_regular_file(file_or_dir)) return io::read_split(file_or_dir);
  if (!fs::is_directory(file_or_dir))
    throw DataError("split path does not exist: " + file_or_dir.string());
  if (!ratio || !rep)
    throw ConfigError("a split directory needs --ratio and --rep to pick a file");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(file_or_dir))
    if (e.path().extension() == ".json" &&
        e.path().filename().string().starts_with("split_"))
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) {
    const dataset::SplitDocument doc = io::read_split(f);
    if (std::abs(doc.openset.openness_ratio - *ratio) < 1e-9 &&
        doc.openset.repetition_index == *rep)
      return doc;
  }
  throw DataError("no split with ratio " + std::to_string(*ratio) + ", rep " +
                  std::to_string(*rep) + " under " + file_or_dir.string());
}

void cmd_train(const TrainCliConfig& cfg) {
  const coatgen::Herd herd = io::load_herd(cfg.herd);
  const dataset::SplitDocument doc = resolve_split(cfg.split, cfg.ratio, cfg.rep);
  const LossKind kind = parse_loss_kind(cfg.loss);

  embednet::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed_mix(doc.openset.seed, 20, static_cast<std::uint64_t>(kind));
  const embednet::TrainResult result = embednet::train(herd, doc, kind, train_cfg);

  fs::create_directories(cfg.out_dir);
  io::write_checkpoint(cfg.out_dir / "checkpoint.bin", result.net,
                       result.head ? &*result.head : nullptr, result.known_ids);
  io::write_epoch_log(cfg.out_dir / "epochs.csv", result.log);

  json j = train_config_json(train_cfg);
  j["command"] = "train";
  j["loss"] = cfg.loss;
  j["herd"] = cfg.herd.string();
  j["ratio"] = doc.openset.openness_ratio;
  j["repetition"] = doc.openset.repetition_index;
  j["split_seed"] = doc.openset.seed;
  j["momentum_enabled"] = result.momentum_enabled;
  j["effective_p"] = result.effective_p;
  j["param_count"] = result.net.param_count();
  write_config_json(cfg.out_dir, j);

  std::cout << "trained " << cfg.loss << " for " << train_cfg.epochs
            << " epochs; best validation accuracy "
            << io::format_double(result.pocket.best_val_accuracy) << " at epoch "
            << result.pocket.best_epoch << "\n";
}

namespace {

embednet::EmbedNet net_from_checkpoint(const io::Checkpoint& ckpt) {
  embednet::EmbedNet net(ckpt.net_config);
  if (net.params().size() != ckpt.net_params.size())
    throw DataError("checkpoint parameter count does not match its net config");
  net.params() = ckpt.net_params;
  return net;
}

std::string eval_row_csv(const std::string& kind, const openset::EvalResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%s,%d,%.6f,%.6f,%.6f\n", kind.c_str(),
                io::format_double(r.ratio).c_str(), r.repetition, r.accuracy,
                r.error_known_fraction, r.error_unknown_fraction);
  return buf;
}

}  // namespace

void cmd_eval(const EvalConfig& cfg) {
  const coatgen::Herd herd = io::load_herd(cfg.herd);
  const dataset::SplitDocument doc = resolve_split(cfg.split, cfg.ratio, cfg.rep);
  const io::Checkpoint ckpt = io::read_checkpoint(cfg.checkpoint);
  const embednet::EmbedNet net = net_from_checkpoint(ckpt);

  openset::EvalResult result;
  std::string kind_label;
  if (cfg.closed_set) {
    if (!ckpt.head_params)
      throw ConfigError("closed-set evaluation needs a checkpoint with a classification head");
    embednet::ClassHead head(ckpt.net_config.embed_dim,
                             static_cast<int>(ckpt.known_ids.size()));
    head.params() = *ckpt.head_params;
    result = openset::closed_set_baseline(net, head, ckpt.known_ids, doc, herd);
    kind_label = "baseline";
  } else {
    result = openset::evaluate_split(net, doc, herd, cfg.k, cfg.max_distance);
    kind_label = "knn";
  }

  std::printf("accuracy %.6f (ratio %s, rep %d)\n", result.accuracy,
              io::format_double(result.ratio).c_str(), result.repetition);
  std::printf("error fractions: known %.6f, unknown %.6f\n", result.error_known_fraction,
              result.error_unknown_fraction);

  if (cfg.out_csv) {
    std::string csv = "loss_kind,ratio,repetition,accuracy,err_known_frac,err_unknown_frac\n";
    csv += eval_row_csv(kind_label, result);
    io::write_text(*cfg.out_csv, csv);
  }
  if (cfg.queries_csv) {
    std::string csv = "instance_id,true_label,predicted_label,known\n";
    char buf[96];
    for (const openset::QueryRecord& q : result.queries) {
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%d\n", q.instance_id, q.true_label,
                    q.predicted_label, q.known ? 1 : 0);
      csv += buf;
    }
    io::write_text(*cfg.queries_csv, csv);
  }
}

std::string results_csv(const std::vector<openset::SweepRow>& rows) {
  std::string csv = "loss_kind,ratio,repetition,accuracy,err_known_frac,err_unknown_frac\n";
  char buf[160];
  for (const openset::SweepRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%.6f,%.6f,%.6f\n", r.kind.c_str(),
                  io::format_double(r.ratio).c_str(), r.repetition, r.accuracy, r.err_known,
                  r.err_unknown);
    csv += buf;
  }
  return csv;
}

std::string summary_csv(const std::vector<openset::SweepSummaryRow>& rows) {
  // mean:[min,max] column mirrors the familiar accuracy-table layout.
  std::string csv = "loss_kind,ratio,mean_accuracy,min_accuracy,max_accuracy,summary\n";
  char buf[200];
  for (const openset::SweepSummaryRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%.2f:[%.2f;%.2f]\n", r.kind.c_str(),
                  io::format_double(r.ratio).c_str(), r.mean, r.min, r.max, 100.0 * r.mean,
                  100.0 * r.min, 100.0 * r.max);
    csv += buf;
  }
  return csv;
}

std::string sweep_svg(const openset::SweepResult& result) {
  std::vector<std::string> kind_order;
  for (const openset::SweepSummaryRow& r : result.summary)
    if (std::find(kind_order.begin(), kind_order.end(), r.kind) == kind_order.end())
      kind_order.push_back(r.kind);

  std::vector<svgplot::Series> series;
  for (const std::string& kind : kind_order) {
    svgplot::Series s;
    s.label = kind;
    for (const openset::SweepSummaryRow& r : result.summary) {
      if (r.kind != kind) continue;
      s.x.push_back(r.ratio);
      s.y.push_back(100.0 * r.mean);
      s.y_lo.push_back(100.0 * r.min);
      s.y_hi.push_back(100.0 * r.max);
    }
    series.push_back(std::move(s));
  }
  return svgplot::line_plot(series, "accuracy vs openness", "openness ratio",
                            "accuracy (%)");
}

openset::SweepResult run_sweep(const coatgen::Herd& herd, const SweepConfig& cfg) {
  const auto docs = dataset::make_split_documents(herd, cfg.ratios, cfg.reps, cfg.seed);
  fs::create_directories(cfg.out_dir / "splits");
  for (const dataset::SplitDocument& doc : docs)
    io::write_split(cfg.out_dir / "splits" /
                        split_filename(doc.openset.ratio_index, doc.openset.repetition_index),
                    doc);

  std::vector<openset::SweepKind> kinds;
  for (const std::string& name : cfg.kinds) kinds.push_back(openset::parse_sweep_kind(name));

  openset::SweepProgress progress = nullptr;
  if (!cfg.quiet) {
    progress = [](const openset::SweepRow& row) {
      std::fprintf(stderr, "  %-12s ratio %-5s rep %d  accuracy %.4f\n", row.kind.c_str(),
                   io::format_double(row.ratio).c_str(), row.repetition, row.accuracy);
    };
  }
  const openset::SweepResult result =
      openset::openness_sweep(herd, docs, kinds, cfg.train, progress);

  io::write_text(cfg.out_dir / "results.csv", results_csv(result.rows));
  io::write_text(cfg.out_dir / "summary.csv", summary_csv(result.summary));
  io::write_text(cfg.out_dir / "sweep.svg", sweep_svg(result));

  json j = train_config_json(cfg.train);
  j["command"] = "sweep";
  j["kinds"] = cfg.kinds;
  j["ratios"] = cfg.ratios;
  j["reps"] = cfg.reps;
  j["sweep_seed"] = cfg.seed;
  write_config_json(cfg.out_dir, j);
  return result;
}

void cmd_sweep(const SweepConfig& cfg) {
  const coatgen::Herd herd = io::load_herd(cfg.herd);
  const openset::SweepResult result = run_sweep(herd, cfg);
  std::cout << "sweep complete: " << result.rows.size() << " runs, outputs in "
            << cfg.out_dir.string() << "\n";
}

void cmd_det_eval(const DetEvalConfig& cfg) {
  std::vector<detgeom::ImageAnnotations> dets = io::read_annotations(cfg.detections);
  const std::vector<detgeom::ImageAnnotations> gts = io::read_annotations(cfg.ground_truth);
  if (cfg.nms_thresh) {
    for (detgeom::ImageAnnotations& img : dets)
      img.boxes = detgeom::nms(img.boxes, *cfg.nms_thresh);
  }
  const double ap =
      detgeom::average_precision(dets, gts, cfg.iou_thresh, cfg.conf_thresh);
  std::printf("AP %.4f\n", ap);
  if (cfg.plot_svg) {
    const auto curve =
        detgeom::precision_recall_curve(dets, gts, cfg.iou_thresh, cfg.conf_thresh);
    io::write_text(*cfg.plot_svg, svgplot::pr_curve(curve, "precision-recall"));
  }
}

void cmd_plot(const PlotConfig& cfg) {
  const coatgen::Herd herd = io::load_herd(cfg.herd);
  const dataset::SplitDocument doc = resolve_split(cfg.split, cfg.ratio, cfg.rep);
  const io::Checkpoint ckpt = io::read_checkpoint(cfg.checkpoint);
  const embednet::EmbedNet net = net_from_checkpoint(ckpt);

  // Embed every non-testing instance, project to 2-D, group per class.
  std::vector<int> ids;
  std::vector<int> labels;
  for (const dataset::ClassSplit& cs : doc.classes) {
    for (int i : cs.train) {
      ids.push_back(i);
      labels.push_back(cs.identity_id);
    }
    for (int i : cs.val) {
      ids.push_back(i);
      labels.push_back(cs.identity_id);
    }
  }
  const std::vector<Vec> embs = embednet::embed_all(net, herd, ids);
  const auto projected = pca_project_2d(embs);

  std::set<int> unknown(doc.openset.unknown.begin(), doc.openset.unknown.end());
  std::map<int, svgplot::ScatterGroup> groups;
  for (std::size_t i = 0; i < projected.size(); ++i) {
    svgplot::ScatterGroup& g = groups[labels[i]];
    if (g.points.empty()) {
      g.label = "id " + std::to_string(labels[i]);
      g.highlight = unknown.count(labels[i]) > 0;
    }
    g.points.push_back(projected[i]);
  }
  std::vector<svgplot::ScatterGroup> ordered;
  for (auto& [id, g] : groups) ordered.push_back(std::move(g));
  io::write_text(cfg.out_svg,
                 svgplot::scatter_plot(ordered, "embedding projection (hollow = unknown)"));
  std::cout << "wrote " << cfg.out_svg.string() << "\n";
}

}  // namespace herdmetric::cli
