// dmpc_cli gen|solve|bench|check
//
// Exit codes: 0 success, 1 I/O error, 2 generation/schema error,
// 3 planner or check failure, 64 usage error.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmpc/dmpc.h"

namespace {

constexpr int kExitIo = 1;
constexpr int kExitData = 2;
constexpr int kExitFailed = 3;
constexpr int kExitUsage = 64;

int report(dmpc_status st) {
  std::fprintf(stderr, "error: %s\n", dmpc_last_error());
  switch (st) {
    case DMPC_ERR_IO: return kExitIo;
    case DMPC_ERR_SCHEMA:
    case DMPC_ERR_GENERATION: return kExitData;
    case DMPC_ERR_PLANNER: return kExitFailed;
    case DMPC_ERR_INVALID_ARGUMENT: return kExitUsage;
    default: return kExitFailed;
  }
}

struct GenArgs {
  int n = 0;
  double density = 0.0;
  std::vector<double> box;
  std::uint64_t seed = 0;
  std::string preset = "default";
  std::string out;
};

int run_gen(const GenArgs& a) {
  dmpc_gen_options o;
  dmpc_gen_options_init(&o);
  o.n = a.n;
  o.seed = a.seed;
  o.preset = a.preset.c_str();
  if (a.density > 0.0) {
    o.density = a.density;
  } else if (a.box.size() == 3) {
    for (int i = 0; i < 3; ++i) o.box[i] = a.box[static_cast<std::size_t>(i)];
  } else {
    std::fprintf(stderr, "error: give --density or --box X,Y,Z\n");
    return kExitUsage;
  }
  dmpc_scenario* s = nullptr;
  dmpc_status st = dmpc_scenario_generate(&o, &s);
  if (st == DMPC_ERR_INVALID_ARGUMENT) {
    // Parameter combinations the generator cannot honour are generation errors.
    std::fprintf(stderr, "error: %s\n", dmpc_last_error());
    return kExitData;
  }
  if (st != DMPC_OK) return report(st);
  st = dmpc_scenario_save(s, a.out.c_str());
  double ws[6];
  dmpc_scenario_workspace(s, ws);
  dmpc_scenario_free(s);
  if (st != DMPC_OK) return report(st);
  std::printf("wrote %s: %d agents, box [%.4g, %.4g] x [%.4g, %.4g] x [%.4g, %.4g]\n", a.out.c_str(), a.n, ws[0],
              ws[3], ws[1], ws[4], ws[2], ws[5]);
  return 0;
}

struct SolveArgs {
  std::string scenario;
  std::string config;
  std::string strategy = "soft-on-demand";
  std::string mode = "sequential";
  int clusters = 1;
  bool scale = false;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_solve(const SolveArgs& a) {
  dmpc_solve_options o;
  dmpc_solve_options_init(&o);
  if (dmpc_strategy_parse(a.strategy.c_str(), &o.strategy) != DMPC_OK) return report(DMPC_ERR_INVALID_ARGUMENT);
  o.clusters = a.mode == "clustered" ? a.clusters : 0;
  o.scale = a.scale ? 1 : 0;
  o.seed = a.seed;

  dmpc_scenario* s = nullptr;
  dmpc_status st = dmpc_scenario_load(a.scenario.c_str(), a.config.empty() ? nullptr : a.config.c_str(), &s);
  if (st == DMPC_ERR_INVALID_ARGUMENT) st = DMPC_ERR_SCHEMA;
  if (st != DMPC_OK) return report(st);

  std::error_code ec;
  std::filesystem::create_directories(a.out_dir, ec);
  if (ec) {
    dmpc_scenario_free(s);
    std::fprintf(stderr, "error: cannot create '%s': %s\n", a.out_dir.c_str(), ec.message().c_str());
    return kExitIo;
  }

  dmpc_result* r = nullptr;
  const dmpc_status solved = dmpc_solve(s, &o, &r);
  dmpc_scenario_free(s);
  if (!r) return report(solved);
  const std::string failure = solved == DMPC_OK ? "" : dmpc_last_error();

  const std::string csv = (std::filesystem::path(a.out_dir) / "trajectory.csv").string();
  const std::string metrics = (std::filesystem::path(a.out_dir) / "metrics.json").string();
  st = dmpc_result_write_csv(r, csv.c_str());
  if (st == DMPC_OK) st = dmpc_result_write_metrics(r, metrics.c_str());
  dmpc_metrics m;
  dmpc_result_metrics(r, &m);
  dmpc_result_free(r);
  if (st != DMPC_OK) return report(st);

  std::printf("%s: steps=%d transition=%.3f s wall=%.3f s distance=%.4f m (straight %.4f m) min_dist=%.4f\n",
              m.success ? "success" : m.reason, m.steps, m.transition_time_s, m.wall_time_s, m.travelled_distance_m,
              m.straight_line_distance_m, m.min_scaled_distance);
  if (solved != DMPC_OK) {
    std::fprintf(stderr, "error: %s\n", failure.c_str());
    return kExitFailed;
  }
  return 0;
}

struct BenchArgs {
  int trials = 0;
  std::vector<int> n_values{10};
  double density = 0.0;
  double volume = 0.0;
  std::vector<std::string> strategies{"soft-on-demand"};
  std::vector<int> clusters{0};
  std::uint64_t seed_base = 1;
  std::string preset = "default";
  std::string config;
  bool scale = false;
  int workers = 0;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  std::vector<dmpc_strategy> strategies;
  for (const auto& s : a.strategies) {
    dmpc_strategy v;
    if (dmpc_strategy_parse(s.c_str(), &v) != DMPC_OK) return report(DMPC_ERR_INVALID_ARGUMENT);
    strategies.push_back(v);
  }
  std::string patch;
  if (!a.config.empty()) {
    std::FILE* f = std::fopen(a.config.c_str(), "rb");
    if (!f) {
      std::fprintf(stderr, "error: cannot open '%s'\n", a.config.c_str());
      return kExitIo;
    }
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) patch.append(buf, n);
    std::fclose(f);
  }
  dmpc_bench_options o;
  dmpc_bench_options_init(&o);
  o.trials = a.trials;
  o.n_values = a.n_values.data();
  o.n_count = a.n_values.size();
  o.density = a.density;
  o.volume = a.volume;
  o.strategies = strategies.data();
  o.strategy_count = strategies.size();
  o.clusters = a.clusters.data();
  o.cluster_count = a.clusters.size();
  o.seed_base = a.seed_base;
  o.preset = a.preset.c_str();
  o.config_json = patch.empty() ? nullptr : patch.c_str();
  o.scale = a.scale ? 1 : 0;
  o.workers = a.workers;
  o.out_path = a.out.empty() ? nullptr : a.out.c_str();
  const char* summary = nullptr;
  const dmpc_status st = dmpc_bench_run(&o, &summary);
  if (st != DMPC_OK) return report(st);
  if (a.out.empty()) std::fputs(summary, stdout);
  else std::printf("wrote %s\n", a.out.c_str());
  return 0;
}

struct CheckArgs {
  std::string csv;
  std::string scenario;
  std::string config;
};

int run_check(const CheckArgs& a) {
  dmpc_scenario* s = nullptr;
  dmpc_status st = dmpc_scenario_load(a.scenario.c_str(), a.config.empty() ? nullptr : a.config.c_str(), &s);
  if (st == DMPC_ERR_INVALID_ARGUMENT) st = DMPC_ERR_SCHEMA;
  if (st != DMPC_OK) return report(st);
  int passed = 0;
  const char* text = nullptr;
  st = dmpc_check_csv(a.csv.c_str(), s, &passed, &text);
  dmpc_scenario_free(s);
  if (st != DMPC_OK) return report(st);
  std::fputs(text, passed ? stdout : stderr);
  return passed ? 0 : kExitFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed MPC trajectory planner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dmpc_version()));

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a random scenario");
  g->add_option("--n", gen.n, "Number of agents")->required()->check(CLI::PositiveNumber);
  auto* dens = g->add_option("--density", gen.density, "Agents per m^3 (cube workspace)")->check(CLI::PositiveNumber);
  g->add_option("--box", gen.box, "Box edges X,Y,Z [m]")->delimiter(',')->expected(3)->excludes(dens);
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--preset", gen.preset, "Parameter preset: default|dense|small");
  g->add_option("-o,--out", gen.out, "Output scenario file")->required();

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Run one transition");
  s->add_option("scenario", solve.scenario, "Scenario file")->required();
  s->add_option("--config", solve.config, "JSON parameter override");
  s->add_option("--strategy", solve.strategy, "soft-on-demand|hard-on-demand|hard-full-horizon");
  s->add_option("--mode", solve.mode, "sequential|clustered")
      ->check(CLI::IsMember({"sequential", "clustered"}));
  auto* clusters = s->add_option("--clusters", solve.clusters, "Number of clusters")->check(CLI::PositiveNumber);
  s->add_flag("--scale", solve.scale, "Speed the result up to the acceleration limit");
  s->add_option("--seed", solve.seed, "Seed for degenerate-geometry perturbations");
  s->add_option("--out-dir", solve.out_dir, "Directory for trajectory.csv and metrics.json");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Run a benchmark sweep");
  b->add_option("--trials", bench.trials, "Trials per setting")->check(CLI::NonNegativeNumber);
  b->add_option("--n", bench.n_values, "Agent counts")->delimiter(',');
  auto* bd = b->add_option("--density", bench.density, "Agents per m^3")->check(CLI::PositiveNumber);
  b->add_option("--volume", bench.volume, "Fixed cube volume [m^3]")->check(CLI::PositiveNumber)->excludes(bd);
  b->add_option("--strategies", bench.strategies, "Strategies")->delimiter(',');
  b->add_option("--clusters", bench.clusters, "Cluster counts (0: sequential)")->delimiter(',');
  b->add_option("--seed-base", bench.seed_base, "Seed of trial 0");
  b->add_option("--preset", bench.preset, "Parameter preset: default|dense|small");
  b->add_option("--config", bench.config, "JSON parameter override");
  b->add_flag("--scale", bench.scale, "Enable time scaling");
  b->add_option("--workers", bench.workers, "Worker threads (default: DMPC_WORKERS or cores)");
  b->add_option("-o,--out", bench.out, "Resumable results file");

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Verify a trajectory CSV against its scenario");
  c->add_option("csv", check.csv, "Trajectory CSV")->required();
  c->add_option("scenario", check.scenario, "Scenario file")->required();
  c->add_option("--config", check.config, "JSON parameter override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (s->parsed() && clusters->count() > 0 && solve.mode == "sequential" && s->count("--mode") == 0)
    solve.mode = "clustered";

  if (g->parsed()) return run_gen(gen);
  if (s->parsed()) return run_solve(solve);
  if (b->parsed()) return run_bench(bench);
  return run_check(check);
}
