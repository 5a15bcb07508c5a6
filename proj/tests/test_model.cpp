#include <doctest.h>

#include <random>

#include "dmpc/error.hpp"
#include "dmpc/model.hpp"

using namespace dmpc;

namespace {

bool close(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol = 1e-12) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("step_dynamics integrates the double integrator") {
  AgentState s;
  s.v = Vec3(1, 0, 0);
  auto n = step_dynamics(s, Vec3::Zero(), 0.2);
  CHECK(close(n.p, Vec3(0.2, 0, 0)));
  CHECK(close(n.v, Vec3(1, 0, 0)));

  n = step_dynamics(AgentState{}, Vec3(1, 0, 0), 0.2);
  CHECK(close(n.p, Vec3(0.02, 0, 0)));
  CHECK(close(n.v, Vec3(0.2, 0, 0)));
  CHECK(close(n.a_prev, Vec3(1, 0, 0)));

  CHECK_THROWS_AS(step_dynamics(s, Vec3::Zero(), 0.0), ModelError);
  CHECK_THROWS_AS(step_dynamics(s, Vec3(NAN, 0, 0), 0.2), ModelError);
}

TEST_CASE("prediction matrices for K = 1 and K = 2") {
  const Mat3 I = Mat3::Identity();
  auto m = build_prediction_matrices(1, 0.2);
  CHECK(close(m.Lambda, 0.02 * I));
  Eigen::MatrixXd A0(3, 6);
  A0 << I, 0.2 * I;
  CHECK(close(m.A0, A0));

  m = build_prediction_matrices(2, 0.2);
  CHECK(close(m.Lambda.block<3, 3>(0, 0), 0.02 * I));
  CHECK(close(m.Lambda.block<3, 3>(3, 0), 0.06 * I));
  CHECK(close(m.Lambda.block<3, 3>(3, 3), 0.02 * I));
  CHECK(close(m.Lambda.block<3, 3>(0, 3), Mat3::Zero()));
  Eigen::MatrixXd A02(6, 6);
  A02 << I, 0.2 * I, I, 0.4 * I;
  CHECK(close(m.A0, A02));
  Eigen::MatrixXd D(6, 6);
  D << I, Mat3::Zero(), -I, I;
  CHECK(close(m.Delta, D));

  CHECK_THROWS_AS(build_prediction_matrices(0, 0.2), ModelError);
}

TEST_CASE("zero input from rest predicts K copies of the start") {
  const auto m = build_prediction_matrices(7, 0.2);
  Vec6 x0;
  x0 << 0.3, -0.4, 1.1, 0, 0, 0;
  const Eigen::VectorXd P = m.Lambda * Eigen::VectorXd::Zero(21) + m.A0 * x0;
  for (int k = 0; k < 7; ++k) CHECK(close(P.segment<3>(3 * k), x0.head<3>()));
}

TEST_CASE("prediction matrices agree with iterated dynamics") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int draw = 0; draw < 50; ++draw) {
    const int K = 1 + draw % 20;
    const double h = 0.05 + 0.01 * draw;
    AgentState s;
    s.p = Vec3(u(rng), u(rng), u(rng));
    s.v = Vec3(u(rng), u(rng), u(rng));
    Eigen::VectorXd U(3 * K);
    for (int i = 0; i < 3 * K; ++i) U[i] = u(rng);
    const auto m = build_prediction_matrices(K, h);
    const Eigen::VectorXd P = m.Lambda * U + m.A0 * s.x();
    const auto states = propagate(s, U, h);
    REQUIRE(static_cast<int>(states.size()) == K);
    for (int k = 0; k < K; ++k) CHECK((P.segment<3>(3 * k) - states[static_cast<std::size_t>(k)].p).norm() < 1e-10);
  }
}

TEST_CASE("scaled distance uses the ellipsoid") {
  PhysParams p;
  CHECK(scaled_distance(Vec3(0.2, 0, 0.4), p) == doctest::Approx(std::sqrt(0.08)));
  p.n_degree = 4;
  CHECK(scaled_distance(Vec3(1, 1, 0), p) == doctest::Approx(std::pow(2.0, 0.25)));
}

TEST_CASE("parameter validation") {
  PhysParams p;
  CHECK_NOTHROW(p.validate());
  p.Ts = 0.03;  // does not divide 0.2
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = PhysParams{};
  p.n_degree = 3;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = PhysParams{};
  p.a_min = Vec3(1, -1, -1);
  CHECK_THROWS_AS(p.validate(), ModelError);

  AlgoParams a;
  CHECK_NOTHROW(a.validate());
  CHECK(a.max_steps(0.2) == 100);
  a.kappa = 16;
  CHECK_THROWS_AS(a.validate(), ModelError);
  a = AlgoParams{};
  a.Q(0, 1) = 5.0;  // not symmetric
  CHECK_THROWS_AS(a.validate(), ModelError);
  a = AlgoParams{};
  a.eps_check = 0.01;  // below eps_max
  CHECK_THROWS_AS(a.validate(), ModelError);
}

TEST_CASE("scenario validation") {
  Scenario s;
  s.agents = {{Vec3(0, 0, 1), Vec3(0.5, 0, 1), false}, {Vec3(0.5, 0.5, 1), Vec3(0, 0.5, 1), false}};
  CHECK_NOTHROW(s.validate());
  s.agents[1].start = Vec3(0.1, 0, 1);
  CHECK_THROWS_AS(s.validate(), ModelError);
  s.agents[1].start = Vec3(0.5, 0.5, 3.0);  // outside the box
  CHECK_THROWS_AS(s.validate(), ModelError);
  s.agents[1] = {Vec3(0.5, 0.5, 1), Vec3(0.6, 0.5, 1), true};
  CHECK_THROWS_AS(s.validate(), ModelError);
}

TEST_CASE("initial predictions sample the straight line") {
  Scenario s;
  s.algo.K = 5;
  s.agents = {{Vec3(0, 0, 1), Vec3(1, 0, 1), false},
              {Vec3(-0.5, 0.5, 1), Vec3(-0.5, 0.5, 1), true},
              {Vec3(1, 0.5, 1), Vec3(0, 0.5, 1), false}};
  const auto plan = init_all_predictions(s);
  REQUIRE(plan.predictions.size() == 3);
  const auto& p = plan.predictions[0].positions;
  REQUIRE(p.size() == 5);
  const double step = 1.0 / s.algo.T_max * s.phys.h;
  for (int k = 0; k < 5; ++k) {
    CHECK(p[static_cast<std::size_t>(k)].x() == doctest::Approx(k * step));
    CHECK(p[static_cast<std::size_t>(k)].y() == 0.0);
  }
  for (const auto& q : plan.predictions[1].positions) CHECK(close(q, Vec3(-0.5, 0.5, 1)));
  // Mirror symmetry of the exchange about x = 0.5.
  for (int k = 0; k < 5; ++k)
    CHECK(plan.predictions[2].positions[static_cast<std::size_t>(k)].x() ==
          doctest::Approx(1.0 - p[static_cast<std::size_t>(k)].x()));
  for (const auto& st : plan.states) CHECK(st.v.isZero());
}

TEST_CASE("aligned horizon view") {
  PredictionHorizon h;
  h.start_step = 3;
  h.positions = {Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0)};
  const auto a = h.aligned(2, 5, Vec3(9, 9, 9));
  REQUIRE(a.size() == 5);
  CHECK(close(a.positions[0], Vec3(9, 9, 9)));
  CHECK(close(a.positions[1], Vec3(1, 0, 0)));
  CHECK(close(a.positions[3], Vec3(3, 0, 0)));
  CHECK(close(a.positions[4], Vec3(3, 0, 0)));
}
