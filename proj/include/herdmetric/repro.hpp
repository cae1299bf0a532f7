#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "herdmetric/embednet.hpp"

namespace herdmetric::repro {

namespace fs = std::filesystem;

struct CriterionResult {
  int index = 0;
  std::string name;
  std::string bound;
  std::string measured;
  bool pass = false;
  double wall_seconds = 0.0;
};

struct ReproReport {
  std::vector<CriterionResult> criteria;
  bool all_pass() const {
    for (const CriterionResult& c : criteria)
      if (!c.pass) return false;
    return true;
  }
};

struct ReproOptions {
  fs::path out_dir;
  std::uint64_t seed = 7;
  // Desk-scale defaults: the full walkthrough stays under ~20 CPU-minutes.
  int identities = 16;
  int per_identity = 40;
  std::vector<double> ratios = {0.25, 0.5, 0.75};
  int reps = 3;
  int epochs = 40;
  std::vector<std::string> kinds = {"baseline", "tl", "softmax-rtl"};
  embednet::TrainConfig train;

  // Thresholds (percent points); raising min_rtl_accuracy_pct above 100
  // forces a failure, which the smoke test uses.
  double min_rtl_accuracy_pct = 80.0;
  double min_gap_pct = 20.0;
  double tl_tolerance_pct = 2.0;
};

// Standalone checks reused by the acceptance binary.
CriterionResult check_gradients(std::uint64_t seed = 42);
CriterionResult check_mining_oracle(std::uint64_t seed = 42);
CriterionResult check_detection_math();

// Drives generate -> split -> train -> sweep -> plot, evaluates every
// criterion, and writes <out>/report.md. The sweep runs twice to prove the
// CSVs are byte-identical under the same seed.
ReproReport run_repro(const ReproOptions& options);

std::string report_markdown(const ReproReport& report);

}  // namespace herdmetric::repro
