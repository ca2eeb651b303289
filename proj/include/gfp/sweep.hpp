#pragma once
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "gfp/metrics.hpp"

namespace gfp {

// Hyperparameter sweep over guidance temperature and/or distillation weight.
struct SweepSpec {
  std::filesystem::path base_config;
  std::string axis = "eta";  // eta | alpha | both
  std::vector<double> eta_values;
  std::vector<double> alpha_values;
  std::vector<uint64_t> seeds;
  std::vector<std::string> overrides;  // key=value edits applied to the base config
  std::filesystem::path out_dir;

  void validate() const;
};

struct SweepRow {
  double eta = 0.0;
  double alpha = 0.0;
  uint64_t seed = 0;
  bool ok = false;
  double actor_score = 0.0;
  double vabc_score = 0.0;
  MetricsRecord final_record;
  std::string status;  // "ok" or the failure message
};

// One trainer per (eta, alpha, seed) combination, run on a pool of
// independent single-threaded workers (size capped by the GFP_THREADS
// environment variable). A failed run is recorded and the sweep continues.
// Rows come back sorted by (eta, alpha, seed).
std::vector<SweepRow> run_sweep(const SweepSpec& spec, std::ostream* log);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

int sweep_worker_count(size_t n_runs);

}  // namespace gfp
