#include "dmpc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dmpc/error.hpp"

namespace dmpc {

using nlohmann::json;

int default_worker_count() {
  if (const char* env = std::getenv("DMPC_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct TrialSpec {
  std::string key;
  int n;
  Strategy strategy;
  int clusters;
  int trial;
  std::uint64_t seed;
};

std::string trial_key(int n, Strategy s, int clusters, int trial) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "n%04d/%s/c%02d/t%05d", n, to_string(s), clusters, trial);
  return buf;
}

json record_json(const TrialRecord& r) {
  json j = {{"key", r.key},     {"n", r.n},       {"strategy", to_string(r.strategy)},
            {"clusters", r.clusters}, {"trial", r.trial}, {"seed", r.seed}};
  if (!r.error.empty()) {
    j["error"] = r.error;
    j["success"] = false;
    j["reason"] = "error";
    return j;
  }
  j["metrics"] = json::parse(metrics_to_json(r.metrics));
  j["success"] = r.metrics.success;
  return j;
}

std::optional<TrialRecord> record_from_json(const json& j) {
  try {
    TrialRecord r;
    r.key = j.at("key").get<std::string>();
    r.n = j.at("n").get<int>();
    auto s = parse_strategy(j.at("strategy").get<std::string>());
    if (!s) return std::nullopt;
    r.strategy = *s;
    r.clusters = j.at("clusters").get<int>();
    r.trial = j.at("trial").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("error")) {
      r.error = j["error"].get<std::string>();
      return r;
    }
    const json& m = j.at("metrics");
    r.metrics.success = m.at("success").get<bool>();
    const std::string reason = m.at("reason").get<std::string>();
    for (auto fr : {FailureReason::none, FailureReason::timeout, FailureReason::collision_check_failed,
                    FailureReason::qp_unrecoverable})
      if (reason == to_string(fr)) r.metrics.reason = fr;
    r.metrics.transition_time = m.at("transition_time_s").get<double>();
    r.metrics.wall_time = m.at("wall_time_s").get<double>();
    r.metrics.travelled_distance = m.at("travelled_distance_m").get<double>();
    r.metrics.straight_line_distance = m.at("straight_line_distance_m").get<double>();
    r.metrics.min_scaled_distance = m.at("min_scaled_distance").get<double>();
    r.metrics.goal_error = m.at("goal_error_m").get<std::vector<double>>();
    r.metrics.steps = m.at("steps").get<int>();
    r.metrics.gamma = m.at("gamma").get<double>();
    r.metrics.qp_failures = m.at("qp_failures").get<int>();
    r.metrics.max_kkt_residual = m.at("max_kkt_residual").get<double>();
    return r;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

std::vector<AggregateRow> aggregate(const std::vector<TrialRecord>& trials) {
  std::map<std::tuple<int, int, int>, std::vector<const TrialRecord*>> groups;
  for (const auto& t : trials)
    groups[{t.n, static_cast<int>(t.strategy), t.clusters}].push_back(&t);
  std::vector<AggregateRow> out;
  for (const auto& [k, members] : groups) {
    AggregateRow row;
    row.n = std::get<0>(k);
    row.strategy = static_cast<Strategy>(std::get<1>(k));
    row.clusters = std::get<2>(k);
    row.trials = static_cast<int>(members.size());
    double sum_w = 0.0, sum_w2 = 0.0, sum_ratio = 0.0;
    int timed = 0;
    for (const auto* t : members) {
      if (!t->error.empty()) continue;
      ++timed;
      sum_w += t->metrics.wall_time;
      sum_w2 += t->metrics.wall_time * t->metrics.wall_time;
      if (t->metrics.success) {
        ++row.successes;
        sum_ratio += t->metrics.distance_ratio();
      }
    }
    row.success_rate = row.trials > 0 ? static_cast<double>(row.successes) / row.trials : 0.0;
    if (timed > 0) {
      row.mean_wall_time = sum_w / timed;
      const double var = timed > 1 ? (sum_w2 - timed * row.mean_wall_time * row.mean_wall_time) / (timed - 1) : 0.0;
      row.std_wall_time = std::sqrt(std::max(0.0, var));
    }
    if (row.successes > 0) row.mean_distance_ratio = sum_ratio / row.successes;
    out.push_back(row);
  }
  return out;
}

void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace '" + path + "': " + ec.message());
}

std::map<std::string, TrialRecord> load_existing(const std::string& path) {
  std::map<std::string, TrialRecord> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("existing bench file '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("trials") || !doc["trials"].is_array())
    throw IoError("existing bench file '" + path + "' has no trials array");
  for (const auto& t : doc["trials"])
    if (auto r = record_from_json(t)) out.emplace(r->key, std::move(*r));
  return out;
}

TrialRecord run_one(const TrialSpec& spec, const BenchOptions& o, const Preset& preset) {
  TrialRecord r;
  r.key = spec.key;
  r.n = spec.n;
  r.strategy = spec.strategy;
  r.clusters = spec.clusters;
  r.trial = spec.trial;
  r.seed = spec.seed;
  try {
    GenerateOptions g;
    g.n = spec.n;
    g.seed = spec.seed;
    g.phys = preset.phys;
    g.algo = preset.algo;
    if (o.density) g.density = o.density;
    else if (o.volume) g.box = Vec3::Constant(std::cbrt(*o.volume));
    else if (o.box) g.box = o.box;
    else g.density = 1.0;
    Scenario sc = generate_random_scenario(g);
    if (!o.config_patch.empty()) {
      // The patch must not move the generated workspace.
      const Vec3 lo = sc.phys.p_min, hi = sc.phys.p_max;
      apply_config_override(sc, o.config_patch);
      sc.phys.p_min = lo;
      sc.phys.p_max = hi;
    }
    EngineConfig cfg;
    cfg.strategy = spec.strategy;
    cfg.clusters = spec.clusters;
    cfg.rng_seed = spec.seed;
    cfg.scale = o.scale;
    const TransitionResult res = run_transition(sc, cfg);
    r.metrics = compute_metrics(res, sc);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

std::string bench_to_json(const BenchReport& report) {
  json trials = json::array();
  for (const auto& t : report.trials) trials.push_back(record_json(t));
  json agg = json::array();
  for (const auto& a : report.aggregate)
    agg.push_back({{"n", a.n},
                   {"strategy", to_string(a.strategy)},
                   {"clusters", a.clusters},
                   {"trials", a.trials},
                   {"successes", a.successes},
                   {"success_rate", a.success_rate},
                   {"mean_wall_time_s", a.mean_wall_time},
                   {"std_wall_time_s", a.std_wall_time},
                   {"mean_distance_ratio", a.mean_distance_ratio}});
  json doc = {{"format", 1}, {"trials", std::move(trials)}, {"aggregate", std::move(agg)}};
  return doc.dump(2) + "\n";
}

BenchReport run_bench(const BenchOptions& o) {
  if (o.trials < 0) throw ModelError("trials must be >= 0");
  const auto preset = find_preset(o.preset);
  if (!preset) throw ModelError("unknown preset '" + o.preset + "'");

  std::map<std::string, TrialRecord> done;
  if (!o.out_path.empty()) done = load_existing(o.out_path);

  std::vector<TrialSpec> todo;
  BenchReport report;
  std::map<std::string, TrialRecord> results;
  for (int n : o.n_values)
    for (Strategy s : o.strategies)
      for (int c : o.clusters)
        for (int t = 0; t < o.trials; ++t) {
          TrialSpec spec{trial_key(n, s, c, t), n, s, c, t, o.seed_base + static_cast<std::uint64_t>(t)};
          if (auto it = done.find(spec.key); it != done.end() && it->second.seed == spec.seed) {
            results.emplace(spec.key, it->second);
            ++report.skipped;
          } else {
            todo.push_back(spec);
          }
        }
  // Records from other sweeps sharing the file are kept.
  for (auto& [k, r] : done) results.emplace(k, r);

  std::mutex mu;
  std::exception_ptr io_error;
  auto snapshot = [&] {
    BenchReport rep;
    for (const auto& [k, r] : results) rep.trials.push_back(r);
    rep.aggregate = aggregate(rep.trials);
    return rep;
  };
  if (!o.out_path.empty()) write_atomically(o.out_path, bench_to_json(snapshot()));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= todo.size()) return;
      TrialRecord r = run_one(todo[i], o, *preset);
      std::lock_guard lock(mu);
      results.insert_or_assign(r.key, std::move(r));
      if (o.out_path.empty() || io_error) continue;
      try {
        write_atomically(o.out_path, bench_to_json(snapshot()));
      } catch (...) {
        io_error = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(o.workers > 0 ? o.workers : default_worker_count(),
                                                static_cast<int>(std::max<std::size_t>(1, todo.size()))));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (io_error) std::rethrow_exception(io_error);

  BenchReport out = snapshot();
  out.skipped = report.skipped;
  return out;
}

}  // namespace dmpc
