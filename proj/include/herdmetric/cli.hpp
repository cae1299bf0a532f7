#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "herdmetric/coatgen.hpp"
#include "herdmetric/embednet.hpp"
#include "herdmetric/openset.hpp"

namespace herdmetric::cli {

namespace fs = std::filesystem;

// Exit codes: 0 success, 2 usage/config, 3 data, 4 numerical instability.

struct GenerateConfig {
  fs::path out_dir;
  int identities = 46;
  int per_identity = 103;
  std::uint64_t seed = 7;
  coatgen::GrayScottParams gs;
  bool export_patterns = false;
};
void cmd_generate(const GenerateConfig& cfg);

struct SplitConfig {
  fs::path herd;
  fs::path out_dir;
  std::vector<double> ratios = {0.1, 0.17, 0.25, 0.33, 0.5, 0.6, 0.7, 0.8, 0.9};
  int reps = 10;
  std::uint64_t seed = 7;
};
void cmd_split(const SplitConfig& cfg);

// Splits are stored one file per (ratio, repetition):
//   split_ri<ratio_index>_rep<repetition>.json
std::string split_filename(int ratio_index, int repetition);
// Accepts either a split file or a directory plus --ratio/--rep to search.
dataset::SplitDocument resolve_split(const fs::path& file_or_dir,
                                     std::optional<double> ratio, std::optional<int> rep);

struct TrainCliConfig {
  fs::path herd;
  fs::path split;  // file, or directory combined with ratio/rep
  std::optional<double> ratio;
  std::optional<int> rep;
  fs::path out_dir;
  std::string loss = "softmax-rtl";
  embednet::TrainConfig train;
};
void cmd_train(const TrainCliConfig& cfg);

struct EvalConfig {
  fs::path herd;
  fs::path split;
  std::optional<double> ratio;
  std::optional<int> rep;
  fs::path checkpoint;
  int k = 5;
  bool closed_set = false;
  std::optional<double> max_distance;
  std::optional<fs::path> out_csv;
  std::optional<fs::path> queries_csv;
};
void cmd_eval(const EvalConfig& cfg);

struct SweepConfig {
  fs::path herd;
  fs::path out_dir;
  std::vector<std::string> kinds = {"baseline", "tl", "rtl", "softmax-tl", "softmax-rtl"};
  std::vector<double> ratios = {0.1, 0.17, 0.25, 0.33, 0.5, 0.6, 0.7, 0.8, 0.9};
  int reps = 10;
  std::uint64_t seed = 7;
  embednet::TrainConfig train;
  bool quiet = false;
};
void cmd_sweep(const SweepConfig& cfg);

// Runs the sweep against an already-loaded herd (shared with repro).
openset::SweepResult run_sweep(const coatgen::Herd& herd, const SweepConfig& cfg);

struct DetEvalConfig {
  fs::path detections;
  fs::path ground_truth;
  double iou_thresh = 0.5;
  double conf_thresh = 0.5;
  std::optional<double> nms_thresh;  // apply NMS first when set (paper default 0.28)
  std::optional<fs::path> plot_svg;
};
void cmd_det_eval(const DetEvalConfig& cfg);

struct PlotConfig {
  fs::path herd;
  fs::path split;
  std::optional<double> ratio;
  std::optional<int> rep;
  fs::path checkpoint;
  fs::path out_svg;
};
void cmd_plot(const PlotConfig& cfg);

std::string results_csv(const std::vector<openset::SweepRow>& rows);
std::string summary_csv(const std::vector<openset::SweepSummaryRow>& rows);
std::string sweep_svg(const openset::SweepResult& result);

}  // namespace herdmetric::cli
