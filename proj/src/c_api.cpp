#include "dmpc/dmpc.h"

#include <fstream>
#include <sstream>
#include <string>

#include "dmpc/bench.hpp"
#include "dmpc/engine.hpp"
#include "dmpc/error.hpp"
#include "dmpc/scenario.hpp"

struct dmpc_scenario {
  dmpc::Scenario s;
};

struct dmpc_result {
  dmpc::Scenario scenario;
  dmpc::TransitionResult r;
  dmpc::RunMetrics metrics;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_text;

dmpc_status set_error(dmpc_status st, const std::string& msg) {
  g_error = msg;
  return st;
}

// Maps library exceptions to status codes.
template <class F>
dmpc_status guarded(F&& f) {
  g_error.clear();
  try {
    return f();
  } catch (const dmpc::SchemaError& e) {
    return set_error(DMPC_ERR_SCHEMA, e.what());
  } catch (const dmpc::IoError& e) {
    return set_error(DMPC_ERR_IO, e.what());
  } catch (const dmpc::GenerationError& e) {
    return set_error(DMPC_ERR_GENERATION, e.what());
  } catch (const dmpc::ModelError& e) {
    return set_error(DMPC_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(DMPC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(DMPC_ERR_INTERNAL, e.what());
  }
}

dmpc::Strategy to_cpp(dmpc_strategy s) {
  switch (s) {
    case DMPC_SOFT_ON_DEMAND: return dmpc::Strategy::soft_on_demand;
    case DMPC_HARD_ON_DEMAND: return dmpc::Strategy::hard_on_demand;
    case DMPC_HARD_FULL_HORIZON: return dmpc::Strategy::hard_full_horizon;
  }
  throw dmpc::ModelError("unknown strategy");
}

std::string read_text(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dmpc::IoError(std::string("cannot open '") + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

extern "C" {

const char* dmpc_version(void) { return "1.0.0"; }

const char* dmpc_last_error(void) { return g_error.c_str(); }

void dmpc_gen_options_init(dmpc_gen_options* o) {
  if (!o) return;
  *o = dmpc_gen_options{};
  o->n = 4;
  o->box[0] = o->box[1] = 2.0;
  o->box[2] = 1.0;
}

void dmpc_solve_options_init(dmpc_solve_options* o) {
  if (!o) return;
  *o = dmpc_solve_options{};
  o->strategy = DMPC_SOFT_ON_DEMAND;
}

void dmpc_bench_options_init(dmpc_bench_options* o) {
  if (!o) return;
  *o = dmpc_bench_options{};
  o->seed_base = 1;
}

dmpc_status dmpc_strategy_parse(const char* text, dmpc_strategy* out) {
  if (!text || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  const auto s = dmpc::parse_strategy(text);
  if (!s) return set_error(DMPC_ERR_INVALID_ARGUMENT, std::string("unknown strategy '") + text + "'");
  *out = static_cast<dmpc_strategy>(static_cast<int>(*s));
  g_error.clear();
  return DMPC_OK;
}

dmpc_status dmpc_scenario_generate(const dmpc_gen_options* o, dmpc_scenario** out) {
  if (!o || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto preset = dmpc::find_preset(o->preset ? o->preset : "default");
    if (!preset) return set_error(DMPC_ERR_INVALID_ARGUMENT, "unknown preset");
    dmpc::GenerateOptions g;
    g.n = o->n;
    g.seed = o->seed;
    g.phys = preset->phys;
    g.algo = preset->algo;
    if (o->density > 0.0) g.density = o->density;
    else g.box = dmpc::Vec3(o->box[0], o->box[1], o->box[2]);
    *out = new dmpc_scenario{dmpc::generate_random_scenario(g)};
    return DMPC_OK;
  });
}

dmpc_status dmpc_scenario_load(const char* path, const char* config_path, dmpc_scenario** out) {
  if (!path || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    dmpc::Scenario s = dmpc::load_scenario(path);
    if (config_path) dmpc::apply_config_override(s, read_text(config_path), config_path);
    *out = new dmpc_scenario{std::move(s)};
    return DMPC_OK;
  });
}

dmpc_status dmpc_scenario_save(const dmpc_scenario* s, const char* path) {
  if (!s || !path) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    dmpc::save_scenario(s->s, path);
    return DMPC_OK;
  });
}

int dmpc_scenario_agent_count(const dmpc_scenario* s) { return s ? s->s.size() : -1; }

dmpc_status dmpc_scenario_workspace(const dmpc_scenario* s, double out[6]) {
  if (!s || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  for (int i = 0; i < 3; ++i) {
    out[i] = s->s.phys.p_min[i];
    out[3 + i] = s->s.phys.p_max[i];
  }
  return DMPC_OK;
}

void dmpc_scenario_free(dmpc_scenario* s) { delete s; }

dmpc_status dmpc_solve(const dmpc_scenario* s, const dmpc_solve_options* o, dmpc_result** out) {
  if (!s || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  dmpc_solve_options opts;
  dmpc_solve_options_init(&opts);
  if (o) opts = *o;
  return guarded([&] {
    dmpc::EngineConfig cfg;
    cfg.strategy = to_cpp(opts.strategy);
    cfg.clusters = opts.clusters;
    cfg.scale = opts.scale != 0;
    cfg.rng_seed = opts.seed;
    auto* res = new dmpc_result{s->s, dmpc::run_transition(s->s, cfg), {}};
    res->metrics = dmpc::compute_metrics(res->r, res->scenario);
    *out = res;
    if (!res->r.success)
      return set_error(DMPC_ERR_PLANNER, std::string("transition failed: ") + dmpc::to_string(res->r.reason));
    return DMPC_OK;
  });
}

dmpc_status dmpc_result_metrics(const dmpc_result* r, dmpc_metrics* out) {
  if (!r || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  const auto& m = r->metrics;
  out->success = m.success ? 1 : 0;
  out->reason = dmpc::to_string(m.reason);
  out->transition_time_s = m.transition_time;
  out->wall_time_s = m.wall_time;
  out->travelled_distance_m = m.travelled_distance;
  out->straight_line_distance_m = m.straight_line_distance;
  out->min_scaled_distance = m.min_scaled_distance;
  out->steps = m.steps;
  out->gamma = m.gamma;
  out->qp_failures = m.qp_failures;
  out->max_kkt_residual = m.max_kkt_residual;
  return DMPC_OK;
}

int dmpc_result_sample_count(const dmpc_result* r) { return r ? r->r.interpolated.samples() : -1; }

dmpc_status dmpc_result_sample(const dmpc_result* r, int agent, int sample, double out[10]) {
  if (!r || !out) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  const auto& tr = r->r.interpolated;
  if (agent < 0 || agent >= static_cast<int>(tr.agents.size()) || sample < 0 || sample >= tr.samples())
    return set_error(DMPC_ERR_INVALID_ARGUMENT, "agent or sample index out of range");
  const auto& s = tr.agents[static_cast<std::size_t>(agent)][static_cast<std::size_t>(sample)];
  out[0] = s.t;
  for (int i = 0; i < 3; ++i) {
    out[1 + i] = s.p[i];
    out[4 + i] = s.v[i];
    out[7 + i] = s.a[i];
  }
  return DMPC_OK;
}

dmpc_status dmpc_result_write_csv(const dmpc_result* r, const char* path) {
  if (!r || !path) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    dmpc::write_trajectory_csv(std::string(path), r->r.interpolated);
    return DMPC_OK;
  });
}

dmpc_status dmpc_result_write_metrics(const dmpc_result* r, const char* path) {
  if (!r || !path) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw dmpc::IoError(std::string("cannot open '") + path + "' for writing");
    out << dmpc::metrics_to_json(r->metrics, &r->r);
    out.flush();
    if (!out) throw dmpc::IoError(std::string("cannot write '") + path + "'");
    return DMPC_OK;
  });
}

void dmpc_result_free(dmpc_result* r) { delete r; }

dmpc_status dmpc_check_csv(const char* csv_path, const dmpc_scenario* s, int* passed, const char** report) {
  if (!csv_path || !s || !passed) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto traj = dmpc::read_trajectory_csv(std::string(csv_path));
    const auto rep = dmpc::check_trajectory(traj, s->s);
    *passed = rep.pass ? 1 : 0;
    g_text = rep.message;
    if (report) *report = g_text.c_str();
    return DMPC_OK;
  });
}

dmpc_status dmpc_bench_run(const dmpc_bench_options* o, const char** summary_json) {
  if (!o) return set_error(DMPC_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    dmpc::BenchOptions b;
    b.trials = o->trials;
    if (o->n_count > 0) {
      if (!o->n_values) return set_error(DMPC_ERR_INVALID_ARGUMENT, "n_values is null");
      b.n_values.assign(o->n_values, o->n_values + o->n_count);
    }
    if (o->density > 0.0) b.density = o->density;
    else if (o->volume > 0.0) b.volume = o->volume;
    if (o->strategy_count > 0) {
      if (!o->strategies) return set_error(DMPC_ERR_INVALID_ARGUMENT, "strategies is null");
      b.strategies.clear();
      for (std::size_t i = 0; i < o->strategy_count; ++i) b.strategies.push_back(to_cpp(o->strategies[i]));
    }
    if (o->cluster_count > 0) {
      if (!o->clusters) return set_error(DMPC_ERR_INVALID_ARGUMENT, "clusters is null");
      b.clusters.assign(o->clusters, o->clusters + o->cluster_count);
    }
    b.seed_base = o->seed_base;
    if (o->preset) b.preset = o->preset;
    if (o->config_json) b.config_patch = o->config_json;
    b.scale = o->scale != 0;
    b.workers = o->workers;
    if (o->out_path) b.out_path = o->out_path;
    const auto report = dmpc::run_bench(b);
    g_text = dmpc::bench_to_json(report);
    if (summary_json) *summary_json = g_text.c_str();
    return DMPC_OK;
  });
}

}  // extern "C"
