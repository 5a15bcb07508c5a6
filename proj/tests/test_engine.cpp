#include <doctest.h>

#include "dmpc/engine.hpp"
#include "dmpc/error.hpp"

using namespace dmpc;

namespace {

PredictionHorizon line(Vec3 p0, Vec3 step, int K) {
  PredictionHorizon h;
  for (int k = 1; k <= K; ++k) h.positions.push_back(p0 + k * step);
  return h;
}

Scenario swap_pair() {
  Scenario s;
  s.id = "pair";
  s.agents = {{Vec3(-0.6, 0, 1), Vec3(0.6, 0.05, 1), false}, {Vec3(0.6, 0.05, 1), Vec3(-0.6, 0, 1), false}};
  return s;
}

Scenario four_corners() {
  Scenario s;
  s.id = "corners";
  s.agents = {{Vec3(-0.8, -0.8, 1), Vec3(0.8, 0.8, 1), false},
              {Vec3(0.8, 0.8, 1), Vec3(-0.8, -0.8, 1), false},
              {Vec3(0.8, -0.8, 1), Vec3(-0.8, 0.8, 1), false},
              {Vec3(-0.8, 0.8, 1), Vec3(0.8, -0.8, 1), false}};
  return s;
}

bool same_discrete(const TransitionResult& a, const TransitionResult& b) {
  if (a.discrete.agents.size() != b.discrete.agents.size()) return false;
  for (std::size_t i = 0; i < a.discrete.agents.size(); ++i) {
    const auto& x = a.discrete.agents[i];
    const auto& y = b.discrete.agents[i];
    if (x.p.size() != y.p.size()) return false;
    for (std::size_t k = 0; k < x.p.size(); ++k)
      if (x.p[k] != y.p[k] || x.a[k] != y.a[k]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("soft-on-demand") == Strategy::soft_on_demand);
  CHECK(parse_strategy("hard_on_demand") == Strategy::hard_on_demand);
  CHECK(parse_strategy("hard-full-horizon") == Strategy::hard_full_horizon);
  CHECK_FALSE(parse_strategy("bogus").has_value());
  for (auto s : {Strategy::soft_on_demand, Strategy::hard_on_demand, Strategy::hard_full_horizon})
    CHECK(parse_strategy(to_string(s)) == s);
}

TEST_CASE("config validation") {
  EngineConfig c;
  CHECK_NOTHROW(c.validate());
  c.clusters = -1;
  CHECK_THROWS_AS(c.validate(), ModelError);
  c = EngineConfig{};
  c.escalation.growth = 1.0;
  CHECK_THROWS_AS(c.validate(), ModelError);
}

TEST_CASE("round-robin partition") {
  const auto p = partition_round_robin(5, 2);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == std::vector<int>{0, 2, 4});
  CHECK(p[1] == std::vector<int>{1, 3});
  CHECK(partition_round_robin(3, 8).size() == 3);
  CHECK(partition_round_robin(3, 0).size() == 1);
}

TEST_CASE("goal check is inclusive") {
  const std::vector<Vec3> goals{Vec3(0, 0, 1), Vec3(1, 0, 1)};
  std::vector<Vec3> pos{Vec3(0.0625, 0, 1), Vec3(1, 0, 1)};
  CHECK(check_goal(pos, goals, 0.0625));
  pos[0] = Vec3(0.0625 * 1.01, 0, 1);
  CHECK_FALSE(check_goal(pos, goals, 0.0625));
}

TEST_CASE("lone agent solves the plain QP") {
  PhysParams phys;
  AlgoParams algo;
  QpAssembler as(build_prediction_matrices(algo.K, phys.h), phys, algo);
  EngineConfig cfg;
  AgentState s;
  s.p = Vec3(-0.5, 0, 1);
  const Vec3 goal(0.5, 0.2, 1.2);
  const std::vector<PredictionHorizon> preds{line(s.p, Vec3(0.01, 0, 0), algo.K)};
  const SolveContext ctx{as, preds, Strategy::soft_on_demand, cfg, 0, {}};
  const auto out = build_and_solve_qp(0, s, goal, ctx);
  REQUIRE(out.U.has_value());
  CHECK(out.info.n_c == 0);
  const auto qp = as.plain(s, goal);
  const auto ref = solve_qp(qp.H, qp.f, qp.A_in, qp.b_in);
  CHECK((*out.U - ref.u_star).norm() < 1e-9);
}

TEST_CASE("head-on pair gets one linearized row that the plan respects") {
  PhysParams phys;
  AlgoParams algo;
  QpAssembler as(build_prediction_matrices(algo.K, phys.h), phys, algo);
  AgentState s;
  s.p = Vec3(-0.5, 0, 1);
  s.v = Vec3(0.5, 0, 0);
  const std::vector<PredictionHorizon> preds{line(s.p, Vec3(0.1, 0, 0), algo.K),
                                             line(Vec3(0.5, 0, 1), Vec3(-0.1, 0, 0), algo.K)};
  // 1 - 0.2 k < 0.35 first at k = 4
  const auto det = detect_first_collision(preds[0], preds, 0, phys, algo);
  REQUIRE(det.has_value());
  CHECK(det->k_c == 4);
  const auto row = linearize_collision_constraint(det->neighbors.members[0], det->own_pos, algo.K, phys);

  for (auto strat : {Strategy::hard_on_demand, Strategy::soft_on_demand}) {
    EngineConfig cfg;
    cfg.strategy = strat;
    const SolveContext ctx{as, preds, strat, cfg, 0, {}};
    const auto out = build_and_solve_qp(0, s, Vec3(0.5, 0, 1), ctx);
    REQUIRE(out.U.has_value());
    CHECK(out.info.n_c == 1);
    const auto traj = propagate(s, *out.U, phys.h);
    const double margin = row.nu.dot(traj[3].p) - row.rho;
    if (strat == Strategy::hard_on_demand)
      CHECK(margin >= -1e-8);
    else
      CHECK(margin >= row.eps_coeff * out.info.eps_min - 1e-8);
    for (int k = 0; k < 3 * algo.K; ++k) CHECK(std::abs((*out.U)[k]) <= 1.0 + 1e-9);
  }
}

TEST_CASE("deep predicted violation: hard is infeasible, soft relaxes") {
  PhysParams phys;
  AlgoParams algo;
  QpAssembler as(build_prediction_matrices(algo.K, phys.h), phys, algo);
  AgentState s;
  s.p = Vec3(0, 0, 1);
  s.v = Vec3(1, 0, 0);
  // Neighbour sits 0.1 ahead of the first predicted position.
  const std::vector<PredictionHorizon> preds{line(s.p, Vec3(0.2, 0, 0), algo.K),
                                             line(Vec3(0.3, 0, 1), Vec3::Zero(), algo.K)};
  EngineConfig cfg;
  cfg.strategy = Strategy::hard_on_demand;
  const SolveContext hard{as, preds, Strategy::hard_on_demand, cfg, 0, {}};
  const auto h = build_and_solve_qp(0, s, Vec3(0.9, 0, 1), hard);
  CHECK_FALSE(h.U.has_value());

  cfg.strategy = Strategy::soft_on_demand;
  const SolveContext soft{as, preds, Strategy::soft_on_demand, cfg, 0, {}};
  const auto sres = build_and_solve_qp(0, s, Vec3(0.9, 0, 1), soft);
  REQUIRE(sres.U.has_value());
  CHECK(sres.info.n_c == 1);
  CHECK(sres.info.eps_min < 0.0);
  CHECK(sres.info.retries > 0);
}

TEST_CASE("single agent reaches its goal within the limits") {
  Scenario sc;
  sc.agents = {{Vec3(-0.7, -0.5, 0.5), Vec3(0.6, 0.7, 1.5), false}};
  const auto r = run_transition(sc, EngineConfig{});
  REQUIRE(r.success);
  CHECK(r.metrics.goal_error[0] <= sc.algo.goal_tol);
  for (const auto& a : r.discrete.agents[0].a) CHECK(a.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
  // stops anywhere inside the goal ball
  CHECK(r.metrics.travelled_distance >= r.metrics.straight_line_distance - sc.algo.goal_tol);
  CHECK(r.metrics.transition_time > 0.0);
  CHECK(r.metrics.transition_time <= sc.algo.T_max);
}

TEST_CASE("static agents hold position") {
  Scenario sc;
  sc.agents = {{Vec3(-0.7, 0, 1), Vec3(0.7, 0, 1), false}, {Vec3(0, 0.5, 1), Vec3(0, 0.5, 1), true}};
  const auto r = run_transition(sc, EngineConfig{});
  CHECK(r.success);
  for (const auto& smp : r.interpolated.agents[1])
    CHECK((smp.p - Vec3(0, 0.5, 1)).norm() <= sc.algo.goal_tol);
}

TEST_CASE("pair swap succeeds for every strategy") {
  for (auto strat : {Strategy::soft_on_demand, Strategy::hard_on_demand, Strategy::hard_full_horizon}) {
    EngineConfig cfg;
    cfg.strategy = strat;
    const auto r = run_transition(swap_pair(), cfg);
    CAPTURE(to_string(strat));
    CHECK(r.success);
    CHECK(r.collision.pass);
    CHECK(r.metrics.min_scaled_distance >= 0.35 - 0.05);
  }
}

TEST_CASE("one cluster equals the sequential loop, clustered runs are repeatable") {
  EngineConfig seq;
  EngineConfig one;
  one.clusters = 1;
  const auto a = run_transition(four_corners(), seq);
  const auto b = run_transition(four_corners(), one);
  CHECK(same_discrete(a, b));

  EngineConfig two;
  two.clusters = 2;
  const auto c = run_transition(four_corners(), two);
  const auto d = run_transition(four_corners(), two);
  CHECK(same_discrete(c, d));
  CHECK(c.success);
}

TEST_CASE("perfectly symmetric exchanges stall without colliding") {
  // No deadlock breaking: the linearized rows push straight back.
  Scenario s = swap_pair();
  s.agents[0].goal.y() = 0.0;
  s.agents[1].start.y() = 0.0;
  const auto r = run_transition(s, EngineConfig{});
  CHECK_FALSE(r.success);
  CHECK(r.reason == FailureReason::timeout);
  CHECK(r.collision.pass);

  EngineConfig jacobi;
  jacobi.clusters = 4;
  const auto c = run_transition(four_corners(), jacobi);
  CHECK(c.reason == FailureReason::timeout);
  CHECK(c.collision.pass);
}

TEST_CASE("time scaling keeps the peak acceleration inside the box") {
  Scenario sc;
  sc.agents = {{Vec3(-0.2, 0, 1), Vec3(0.2, 0, 1), false}};
  EngineConfig cfg;
  cfg.scale = true;
  const auto r = run_transition(sc, cfg);
  REQUIRE(r.success);
  CHECK(r.gamma >= 1.0);
  double peak = 0.0;
  for (const auto& a : r.output.agents[0].a) peak = std::max(peak, a.cwiseAbs().maxCoeff());
  CHECK(peak <= 1.0 + 1e-9);
  CHECK(r.output.h == doctest::Approx(sc.phys.h / r.gamma));
}
