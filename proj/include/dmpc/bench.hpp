#pragma once

// Benchmark sweeps: seeded random trials over agent counts, strategies and
// cluster counts, run on a worker pool and stored in a resumable JSON file.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmpc/engine.hpp"
#include "dmpc/scenario.hpp"

namespace dmpc {

struct BenchOptions {
  int trials = 0;
  std::vector<int> n_values{10};
  std::optional<double> density;  ///< agents per m^3
  std::optional<double> volume;   ///< fixed cube volume [m^3]
  std::optional<Vec3> box;        ///< fixed box edges
  std::vector<Strategy> strategies{Strategy::soft_on_demand};
  std::vector<int> clusters{0};
  std::uint64_t seed_base = 1;
  std::string preset = "default";
  std::string config_patch;       ///< optional JSON merge patch, see apply_config_override
  bool scale = false;
  int workers = 0;                ///< 0: DMPC_WORKERS or the hardware concurrency
  std::string out_path;           ///< empty: keep results in memory only
};

struct TrialRecord {
  std::string key;
  int n = 0;
  Strategy strategy = Strategy::soft_on_demand;
  int clusters = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string error;  ///< generation or runtime error; metrics unset
  RunMetrics metrics;
};

struct AggregateRow {
  int n = 0;
  Strategy strategy = Strategy::soft_on_demand;
  int clusters = 0;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_wall_time = 0.0;
  double std_wall_time = 0.0;
  double mean_distance_ratio = 0.0;  ///< over successful trials
};

struct BenchReport {
  std::vector<TrialRecord> trials;  ///< sorted by key
  std::vector<AggregateRow> aggregate;
  int skipped = 0;                  ///< trials found complete in an existing file
};

/// Worker count from DMPC_WORKERS, falling back to the hardware concurrency.
int default_worker_count();

/// Runs every missing trial of the sweep. Existing records in `out_path` are
/// kept and skipped; the file is rewritten after each completed trial.
/// Errors inside a trial are recorded, never thrown.
BenchReport run_bench(const BenchOptions& options);

std::string bench_to_json(const BenchReport& report);

}  // namespace dmpc
