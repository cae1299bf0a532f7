#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "herdmetric/cli.hpp"
#include "herdmetric/error.hpp"
#include "herdmetric/kernels.hpp"
#include "herdmetric/repro.hpp"

namespace {

using namespace herdmetric;

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("HERDMETRIC_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  return std::strtoull(s, nullptr, 10);
}

void add_train_options(CLI::App* cmd, embednet::TrainConfig& t) {
  cmd->add_option("--epochs", t.epochs, "training epochs");
  cmd->add_option("--batch-p", t.batch_p, "classes per batch");
  cmd->add_option("--batch-k", t.batch_k, "instances per class per batch");
  cmd->add_option("--lr", t.learning_rate, "learning rate");
  cmd->add_option("--momentum", t.momentum, "SGD momentum");
  cmd->add_option("--weight-decay", t.weight_decay, "weight decay");
  cmd->add_option("--margin", t.loss.margin, "triplet/contrastive margin");
  cmd->add_option("--lambda", t.loss.lambda, "metric-term weight in combined losses");
  cmd->add_option("--knn-k", t.knn_k, "k for validation kNN");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"herdmetric: open-set identification on synthetic coat patterns"};
  app.require_subcommand(1);

  std::string backend = kernels::omp_available() ? "omp" : "serial";
  app.add_option("--backend", backend, "kernel backend: omp or serial")
      ->check(CLI::IsMember({"omp", "serial"}));

  cli::GenerateConfig gen;
  CLI::App* generate = app.add_subcommand("generate", "synthesize a herd of coat patterns");
  generate->add_option("--out", gen.out_dir, "output directory")->required();
  generate->add_option("--identities", gen.identities, "number of identities");
  generate->add_option("--per-identity", gen.per_identity, "instances per identity");
  generate->add_option("--seed", gen.seed, "master seed");
  generate->add_option("--gs-steps", gen.gs.steps, "reaction-diffusion iterations");
  generate->add_flag("--export-patterns", gen.export_patterns,
                     "also export the 128x128 source patterns");

  cli::SplitConfig split;
  CLI::App* split_cmd = app.add_subcommand("split", "write class and open-set split files");
  split_cmd->add_option("--herd", split.herd, "herd manifest or directory")->required();
  split_cmd->add_option("--out", split.out_dir, "output directory")->required();
  split_cmd->add_option("--ratios", split.ratios, "openness ratios");
  split_cmd->add_option("--reps", split.reps, "repetitions per ratio");
  split_cmd->add_option("--seed", split.seed, "split seed");

  cli::TrainCliConfig train;
  double train_ratio = -1;
  int train_rep = -1;
  CLI::App* train_cmd = app.add_subcommand("train", "train an embedding network");
  train_cmd->add_option("--herd", train.herd, "herd manifest or directory")->required();
  train_cmd->add_option("--split", train.split, "split file or directory")->required();
  train_cmd->add_option("--ratio", train_ratio, "openness ratio (with a split directory)");
  train_cmd->add_option("--rep", train_rep, "repetition index (with a split directory)");
  train_cmd->add_option("--out", train.out_dir, "output directory")->required();
  train_cmd->add_option("--loss", train.loss,
                        "contrastive, tl, rtl, softmax, softmax-tl or softmax-rtl");
  add_train_options(train_cmd, train.train);

  cli::EvalConfig eval;
  double eval_ratio = -1, eval_maxdist = -1;
  int eval_rep = -1;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  eval_cmd->add_option("--herd", eval.herd, "herd manifest or directory")->required();
  eval_cmd->add_option("--split", eval.split, "split file or directory")->required();
  eval_cmd->add_option("--ratio", eval_ratio, "openness ratio (with a split directory)");
  eval_cmd->add_option("--rep", eval_rep, "repetition index (with a split directory)");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--k", eval.k, "kNN neighbours");
  eval_cmd->add_flag("--closed-set", eval.closed_set, "argmax over the trained head instead of kNN");
  eval_cmd->add_option("--max-distance", eval_maxdist,
                       "reject queries farther than this from every gallery entry");
  std::string eval_out, eval_queries;
  eval_cmd->add_option("--out", eval_out, "write a one-row results CSV");
  eval_cmd->add_option("--queries-out", eval_queries, "write per-query records CSV");

  cli::SweepConfig sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "accuracy-vs-openness sweep");
  sweep_cmd->add_option("--herd", sweep.herd, "herd manifest or directory")->required();
  sweep_cmd->add_option("--out", sweep.out_dir, "output directory")->required();
  sweep_cmd->add_option("--losses", sweep.kinds, "sweep kinds (baseline = closed-set softmax)");
  sweep_cmd->add_option("--ratios", sweep.ratios, "openness ratios");
  sweep_cmd->add_option("--reps", sweep.reps, "repetitions per ratio");
  sweep_cmd->add_option("--seed", sweep.seed, "split seed");
  sweep_cmd->add_flag("--quiet", sweep.quiet, "suppress per-run progress");
  add_train_options(sweep_cmd, sweep.train);

  cli::DetEvalConfig det;
  double det_nms = -1;
  std::string det_plot;
  CLI::App* det_cmd = app.add_subcommand("det-eval", "average precision of detections");
  det_cmd->add_option("--detections", det.detections, "detections JSON")->required();
  det_cmd->add_option("--ground-truth", det.ground_truth, "ground-truth JSON")->required();
  det_cmd->add_option("--iou", det.iou_thresh, "IoU match threshold");
  det_cmd->add_option("--confidence", det.conf_thresh, "confidence threshold");
  det_cmd->add_option("--nms", det_nms, "apply NMS at this threshold first");
  det_cmd->add_option("--plot", det_plot, "write a PR-curve SVG");

  cli::PlotConfig plot;
  double plot_ratio = -1;
  int plot_rep = -1;
  CLI::App* plot_cmd = app.add_subcommand("plot", "2-D projection of the embedding space");
  plot_cmd->add_option("--herd", plot.herd, "herd manifest or directory")->required();
  plot_cmd->add_option("--split", plot.split, "split file or directory")->required();
  plot_cmd->add_option("--ratio", plot_ratio, "openness ratio (with a split directory)");
  plot_cmd->add_option("--rep", plot_rep, "repetition index (with a split directory)");
  plot_cmd->add_option("--checkpoint", plot.checkpoint, "checkpoint file")->required();
  plot_cmd->add_option("--out", plot.out_svg, "output SVG")->required();

  repro::ReproOptions repro_opts;
  CLI::App* repro_cmd = app.add_subcommand("repro", "scripted reproduction walkthrough");
  repro_cmd->add_option("--out", repro_opts.out_dir, "output directory")->required();
  repro_cmd->add_option("--seed", repro_opts.seed, "master seed");
  repro_cmd->add_option("--identities", repro_opts.identities, "herd identities");
  repro_cmd->add_option("--per-identity", repro_opts.per_identity, "instances per identity");
  repro_cmd->add_option("--ratios", repro_opts.ratios, "openness ratios");
  repro_cmd->add_option("--reps", repro_opts.reps, "repetitions per ratio");
  repro_cmd->add_option("--epochs", repro_opts.epochs, "training epochs");
  repro_cmd->add_option("--min-rtl-accuracy", repro_opts.min_rtl_accuracy_pct,
                        "required softmax-rtl accuracy at 0.5, percent");
  repro_cmd->add_option("--min-gap", repro_opts.min_gap_pct,
                        "required gap over the baseline, percent points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  kernels::set_backend(backend == "omp" ? kernels::Backend::omp : kernels::Backend::serial);

  // HERDMETRIC_SEED takes precedence over configured master seeds.
  if (const auto seed = env_seed()) {
    gen.seed = *seed;
    split.seed = *seed;
    sweep.seed = *seed;
    repro_opts.seed = *seed;
  }

  try {
    if (generate->parsed()) {
      cli::cmd_generate(gen);
    } else if (split_cmd->parsed()) {
      cli::cmd_split(split);
    } else if (train_cmd->parsed()) {
      if (train_ratio >= 0) train.ratio = train_ratio;
      if (train_rep >= 0) train.rep = train_rep;
      cli::cmd_train(train);
    } else if (eval_cmd->parsed()) {
      if (eval_ratio >= 0) eval.ratio = eval_ratio;
      if (eval_rep >= 0) eval.rep = eval_rep;
      if (eval_maxdist >= 0) eval.max_distance = eval_maxdist;
      if (!eval_out.empty()) eval.out_csv = eval_out;
      if (!eval_queries.empty()) eval.queries_csv = eval_queries;
      cli::cmd_eval(eval);
    } else if (sweep_cmd->parsed()) {
      cli::cmd_sweep(sweep);
    } else if (det_cmd->parsed()) {
      if (det_nms >= 0) det.nms_thresh = det_nms;
      if (!det_plot.empty()) det.plot_svg = det_plot;
      cli::cmd_det_eval(det);
    } else if (plot_cmd->parsed()) {
      if (plot_ratio >= 0) plot.ratio = plot_ratio;
      if (plot_rep >= 0) plot.rep = plot_rep;
      cli::cmd_plot(plot);
    } else if (repro_cmd->parsed()) {
      const repro::ReproReport report = repro::run_repro(repro_opts);
      for (const repro::CriterionResult& c : report.criteria)
        std::printf("[%s] criterion %d: %s — %s\n", c.pass ? "PASS" : "FAIL", c.index,
                    c.name.c_str(), c.measured.c_str());
      if (!report.all_pass()) return 1;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
