#include "dmpc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "dmpc/error.hpp"

namespace dmpc {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::soft_on_demand: return "soft_on_demand";
    case Strategy::hard_on_demand: return "hard_on_demand";
    case Strategy::hard_full_horizon: return "hard_full_horizon";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view text) {
  std::string s(text);
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "soft_on_demand" || s == "soft") return Strategy::soft_on_demand;
  if (s == "hard_on_demand") return Strategy::hard_on_demand;
  if (s == "hard_full_horizon" || s == "hard_full") return Strategy::hard_full_horizon;
  return std::nullopt;
}

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::timeout: return "timeout";
    case FailureReason::collision_check_failed: return "collision_check_failed";
    case FailureReason::qp_unrecoverable: return "qp_unrecoverable";
  }
  return "unknown";
}

void EngineConfig::validate() const {
  if (clusters < 0) throw ModelError("clusters must be >= 0");
  if (!(escalation.growth > 1.0)) throw ModelError("escalation growth must be > 1");
  if (escalation.max_retries < 0) throw ModelError("escalation max_retries must be >= 0");
  if (!(qp_tol > 0.0) || qp_max_iter < 1) throw ModelError("invalid QP solver settings");
}

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 over the three words
  auto sm = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return sm(sm(sm(a) ^ b) ^ c);
}

// Linearizes around `own_pos`, nudging it by a seeded 1e-6 m offset when the
// predicted points coincide.
CollisionRow linearize_robust(const CollisionEvent& ev, const Vec3& own_pos, int K,
                              const PhysParams& phys, std::mt19937_64& rng) {
  try {
    return linearize_collision_constraint(ev, own_pos, K, phys);
  } catch (const DegenerateGeometryError&) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Vec3 dir(unit(rng), unit(rng), unit(rng));
    if (dir.norm() < 1e-3) dir = Vec3::UnitX();
    return linearize_collision_constraint(ev, own_pos + 1e-6 * dir.normalized(), K, phys);
  }
}

double kkt_max(const QpSolution& s) {
  return std::max({s.kkt.stationarity, s.kkt.primal, s.kkt.complementarity});
}

}  // namespace

AgentSolve build_and_solve_qp(int agent_id, const AgentState& state, const Vec3& goal,
                              const SolveContext& ctx) {
  const auto& asm_ = ctx.assembler;
  const auto& phys = asm_.phys();
  const auto& algo = asm_.algo();
  const int K = algo.K;
  const auto& own = ctx.predictions[static_cast<std::size_t>(agent_id)];
  std::mt19937_64 rng(ctx.perturbation_seed);

  QpOptions opts;
  opts.tol = ctx.config.qp_tol;
  opts.max_iter = ctx.config.qp_max_iter;
  if (ctx.config.warm_start) opts.warm_active = ctx.warm_active;

  AgentSolve out;
  auto accept = [&](const QpSolution& sol, const QpProblem& qp) {
    out.U = sol.u_star.head(qp.n_inputs);
    out.info.qp_iterations += sol.iterations;
    out.info.kkt_max = kkt_max(sol);
    out.info.n_c = static_cast<int>(std::count(qp.labels.begin(), qp.labels.end(), RowKind::collision));
    if (qp.n_relax > 0) out.info.eps_min = std::min(0.0, sol.u_star.tail(qp.n_relax).minCoeff());
    out.active_rows = sol.active_rows;
  };

  std::vector<CollisionRow> rows;
  if (ctx.strategy == Strategy::hard_full_horizon) {
    for (int k = 1; k <= K; ++k) {
      const auto set = neighbors_at(own, ctx.predictions, agent_id, k, phys, algo);
      for (const auto& ev : set.members)
        rows.push_back(linearize_robust(ev, own.positions[static_cast<std::size_t>(k - 1)], K, phys, rng));
    }
  } else {
    const auto det = detect_first_collision(own, ctx.predictions, agent_id, phys, algo);
    if (det) {
      for (const auto& ev : det->neighbors.members)
        rows.push_back(linearize_robust(ev, det->own_pos, K, phys, rng));
    }
  }

  if (rows.empty() || ctx.strategy != Strategy::soft_on_demand) {
    const QpProblem qp = rows.empty() ? asm_.plain(state, goal) : asm_.hard(state, goal, rows);
    opts.cost_factor = &qp.J;
    const QpSolution sol = solve_qp(qp.H, qp.f, qp.A_in, qp.b_in, opts);
    if (sol.status == QpStatus::optimal) {
      accept(sol, qp);
    } else {
      out.info.qp_iterations += sol.iterations;
      out.info.n_c = static_cast<int>(rows.size());
    }
    return out;
  }

  // Soft constraints: enlarge the relaxation bound until the QP is feasible.
  // The unconstrained relaxation optimum is positive, so the eps <= 0 rows
  // are always worth trying first.
  std::vector<int> hints;
  const int n = 3 * K;
  const int nc = static_cast<int>(rows.size());
  for (int i = 0; i < nc; ++i) hints.push_back(4 * n + nc + i);
  if (ctx.config.warm_start) hints.insert(hints.end(), ctx.warm_active.begin(), ctx.warm_active.end());
  opts.warm_active = hints;
  double eps_max = algo.eps_max;
  for (int attempt = 0; attempt <= ctx.config.escalation.max_retries; ++attempt) {
    const QpProblem qp = asm_.augmented(state, goal, rows, eps_max);
    opts.cost_factor = &qp.J;
    const QpSolution sol = solve_qp(qp.H, qp.f, qp.A_in, qp.b_in, opts);
    out.info.retries = attempt;
    if (sol.status == QpStatus::optimal) {
      accept(sol, qp);
      return out;
    }
    out.info.qp_iterations += sol.iterations;
    eps_max *= ctx.config.escalation.growth;
  }
  out.info.n_c = static_cast<int>(rows.size());
  return out;
}

bool check_goal(std::span<const Vec3> positions, std::span<const Vec3> goals, double goal_tol) {
  for (std::size_t i = 0; i < positions.size(); ++i)
    if ((positions[i] - goals[i]).norm() > goal_tol) return false;
  return true;
}

std::vector<std::vector<int>> partition_round_robin(int n_agents, int clusters) {
  const int C = std::max(1, std::min(clusters, n_agents));
  std::vector<std::vector<int>> out(static_cast<std::size_t>(C));
  for (int i = 0; i < n_agents; ++i) out[static_cast<std::size_t>(i % C)].push_back(i);
  return out;
}

EngineState EngineState::initial(const Scenario& scenario) {
  auto plan = init_all_predictions(scenario);
  EngineState st;
  st.step = 0;
  st.states = std::move(plan.states);
  st.predictions = std::move(plan.predictions);
  const auto n = static_cast<std::size_t>(scenario.size());
  // Agents start at rest, so hovering is the plan to fall back on at t = 0.
  st.plans.assign(n, Eigen::VectorXd::Zero(3 * scenario.algo.K));
  st.fallback_streak.assign(n, 0);
  st.warm_active.assign(n, {});
  return st;
}

namespace {

// Shifts active physical-limit rows one block earlier; collision and
// relaxation rows are not carried over.
std::vector<int> shift_active(const std::vector<int>& rows, int K) {
  const int n = 3 * K;
  std::vector<int> out;
  for (int r : rows) {
    if (r >= 4 * n) continue;
    const int within = r % n;
    if (within >= 3) out.push_back(r - 3);
  }
  return out;
}

struct AgentUpdate {
  AgentState next;
  PredictionHorizon published;
  Eigen::VectorXd plan;
  int streak = 0;
  std::vector<int> warm;
  AgentStepInfo info;
  bool unrecoverable = false;
};

// Previous plan shifted by one step, with a final braking input.
std::optional<Eigen::VectorXd> fallback_plan(const Eigen::VectorXd& prev, const AgentState& state,
                                             const PhysParams& phys, int K, int streak) {
  if (prev.size() != 3 * K || streak >= K) return std::nullopt;
  Eigen::VectorXd U(3 * K);
  U.head(3 * (K - 1)) = prev.tail(3 * (K - 1));
  AgentState x = state;
  for (int k = 0; k < K - 1; ++k) x = step_dynamics(x, U.segment<3>(3 * k), phys.h);
  const Vec3 brake = (-x.v / phys.h).cwiseMax(phys.a_min).cwiseMin(phys.a_max);
  U.tail<3>() = brake;
  return U;
}

AgentUpdate advance_agent(int i, const EngineState& st, const Scenario& scenario,
                          const QpAssembler& assembler, const EngineConfig& config,
                          std::span<const PredictionHorizon> aligned) {
  const int K = scenario.algo.K;
  const auto& phys = scenario.phys;
  const auto iu = static_cast<std::size_t>(i);
  const AgentState& state = st.states[iu];
  AgentUpdate up;

  if (scenario.agents[iu].is_static) {
    up.plan = Eigen::VectorXd::Zero(3 * K);
  } else {
    SolveContext ctx{assembler,
                     aligned,
                     config.strategy,
                     config,
                     mix_seed(config.rng_seed, static_cast<std::uint64_t>(st.step),
                              static_cast<std::uint64_t>(i)),
                     st.warm_active[iu]};
    AgentSolve solve = build_and_solve_qp(i, state, scenario.agents[iu].goal, ctx);
    up.info = solve.info;
    if (solve.U) {
      up.plan = std::move(*solve.U);
      up.warm = shift_active(solve.active_rows, K);
    } else {
      up.info.qp_failed = true;
      auto fb = fallback_plan(st.plans[iu], state, phys, K, st.fallback_streak[iu]);
      if (!fb) {
        up.unrecoverable = true;
        fb = Eigen::VectorXd::Zero(3 * K);
      }
      up.plan = std::move(*fb);
      up.streak = st.fallback_streak[iu] + 1;
    }
  }

  const auto horizon = propagate(state, up.plan, phys.h);
  up.next = horizon.front();
  if (scenario.agents[iu].is_static) up.next = AgentState{state.p, Vec3::Zero(), Vec3::Zero()};
  up.published.start_step = st.step + 1;
  up.published.positions.reserve(horizon.size());
  for (const auto& x : horizon)
    up.published.positions.push_back(scenario.agents[iu].is_static ? state.p : x.p);
  return up;
}

}  // namespace

StepOutcome run_clustered_step(EngineState& st, const Scenario& scenario,
                               const QpAssembler& assembler, const EngineConfig& config,
                               int clusters) {
  const int N = scenario.size();
  const int K = scenario.algo.K;
  const auto groups = partition_round_robin(N, clusters);
  std::vector<AgentUpdate> updates(static_cast<std::size_t>(N));

  std::vector<Vec3> now(static_cast<std::size_t>(N));
  for (int j = 0; j < N; ++j) now[static_cast<std::size_t>(j)] = st.states[static_cast<std::size_t>(j)].p;

  auto run_group = [&](const std::vector<int>& members) {
    // Private view of the buffer, aligned to the current step.
    std::vector<PredictionHorizon> aligned(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      aligned[ju] = st.predictions[ju].aligned(st.step + 1, K, now[ju]);
    }
    for (int i : members) {
      const auto iu = static_cast<std::size_t>(i);
      updates[iu] = advance_agent(i, st, scenario, assembler, config, aligned);
      aligned[iu] = updates[iu].published.aligned(st.step + 1, K, now[iu]);
    }
  };

  if (groups.size() == 1) {
    run_group(groups.front());
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(groups.size() - 1);
    for (std::size_t g = 1; g < groups.size(); ++g)
      workers.emplace_back([&, g] { run_group(groups[g]); });
    run_group(groups.front());
  }  // joins

  StepOutcome out;
  out.diagnostics.agents.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    auto& up = updates[iu];
    st.states[iu] = up.next;
    st.predictions[iu] = std::move(up.published);
    st.plans[iu] = std::move(up.plan);
    st.fallback_streak[iu] = up.streak;
    st.warm_active[iu] = std::move(up.warm);
    out.diagnostics.agents[iu] = up.info;
    out.unrecoverable = out.unrecoverable || up.unrecoverable;
  }
  ++st.step;
  return out;
}

TransitionResult run_transition(const Scenario& scenario, const EngineConfig& config) {
  scenario.validate();
  config.validate();
  const auto& phys = scenario.phys;
  const auto& algo = scenario.algo;
  const int N = scenario.size();

  const QpAssembler assembler(build_prediction_matrices(algo.K, phys.h), phys, algo);
  EngineState st = EngineState::initial(scenario);

  TransitionResult res;
  res.discrete.h = phys.h;
  res.discrete.agents.resize(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    auto& tr = res.discrete.agents[static_cast<std::size_t>(i)];
    tr.p.push_back(st.states[static_cast<std::size_t>(i)].p);
    tr.v.push_back(st.states[static_cast<std::size_t>(i)].v);
  }
  std::vector<Vec3> goals;
  for (const auto& a : scenario.agents) goals.push_back(a.goal);

  const int k_max = algo.max_steps(phys.h);
  bool at_goal = false;
  bool unrecoverable = false;
  std::vector<Vec3> positions(static_cast<std::size_t>(N));

  const auto t0 = std::chrono::steady_clock::now();
  while (!at_goal && st.step < k_max) {
    const auto ts = std::chrono::steady_clock::now();
    StepOutcome out = run_clustered_step(st, scenario, assembler, config, config.clusters);
    out.diagnostics.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
    for (int i = 0; i < N; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      auto& tr = res.discrete.agents[iu];
      tr.a.push_back(st.states[iu].a_prev);
      tr.p.push_back(st.states[iu].p);
      tr.v.push_back(st.states[iu].v);
      positions[iu] = st.states[iu].p;
      const auto& info = out.diagnostics.agents[iu];
      if (info.qp_failed) ++res.qp_failures;
      res.max_kkt_residual = std::max(res.max_kkt_residual, info.kkt_max);
    }
    res.diagnostics.push_back(std::move(out.diagnostics));
    if (out.unrecoverable) {
      unrecoverable = true;
      break;
    }
    at_goal = check_goal(positions, goals, algo.goal_tol);
  }
  res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  res.steps = st.step;
  for (auto& tr : res.discrete.agents) tr.a.push_back(Vec3::Zero());

  // Post-processing also runs for failed transitions so that diagnostics can
  // be written, but only a converged run can be declared successful.
  res.output = res.discrete;
  if (config.scale && at_goal) {
    auto scaled = scale_trajectory(res.discrete, phys.symmetric_accel_limit());
    res.output = std::move(scaled.trajectory);
    res.gamma = scaled.gamma;
  }
  res.interpolated = interpolate(res.output, phys.Ts);
  res.collision = check_collisions(res.interpolated, phys.r_min, algo.eps_check, phys);

  if (unrecoverable) {
    res.reason = FailureReason::qp_unrecoverable;
  } else if (!at_goal) {
    res.reason = FailureReason::timeout;
  } else if (!res.collision.pass) {
    res.reason = FailureReason::collision_check_failed;
  } else {
    res.success = true;
  }

  auto& m = res.metrics;
  m.travelled_distance = travelled_distance(res.interpolated);
  for (const auto& a : scenario.agents) m.straight_line_distance += (a.goal - a.start).norm();
  m.min_scaled_distance = res.collision.closest.distance;
  m.transition_time = static_cast<double>(res.discrete.samples() - 1) * res.output.h;
  for (int k = 0; k < res.discrete.samples(); ++k) {
    for (int i = 0; i < N; ++i)
      positions[static_cast<std::size_t>(i)] = res.discrete.agents[static_cast<std::size_t>(i)].p[static_cast<std::size_t>(k)];
    if (check_goal(positions, goals, algo.goal_tol)) {
      m.transition_time = k * res.output.h;
      break;
    }
  }
  for (int i = 0; i < N; ++i)
    m.goal_error.push_back((res.discrete.agents[static_cast<std::size_t>(i)].p.back() - goals[static_cast<std::size_t>(i)]).norm());
  return res;
}

}  // namespace dmpc
