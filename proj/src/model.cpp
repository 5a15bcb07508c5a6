#include "dmpc/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmpc/error.hpp"

namespace dmpc {

namespace {

bool finite(const Vec3& v) { return v.allFinite(); }

[[noreturn]] void fail(const std::string& what) { throw ModelError(what); }

bool symmetric_positive_definite(const Mat3& M) {
  if (!M.allFinite() || (M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + M.norm()))
    return false;
  Eigen::LLT<Mat3> llt(M);
  return llt.info() == Eigen::Success;
}

}  // namespace

void PhysParams::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) fail("h must be positive");
  if (!(Ts > 0.0) || Ts > h * (1.0 + 1e-12)) fail("Ts must satisfy 0 < Ts <= h");
  const double ratio = h / Ts;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) fail("Ts must divide h");
  if (!finite(a_min) || !finite(a_max) || !(a_min.array() < a_max.array()).all())
    fail("a_min < a_max must hold componentwise");
  if (!finite(p_min) || !finite(p_max) || !(p_min.array() < p_max.array()).all())
    fail("p_min < p_max must hold componentwise");
  if (!(r_min > 0.0)) fail("r_min must be positive");
  if (!(c_ellipsoid >= 1.0)) fail("c_ellipsoid must be >= 1");
  if (n_degree < 2 || n_degree % 2 != 0) fail("n_degree must be even and >= 2");
}

double PhysParams::symmetric_accel_limit() const {
  return std::min(a_max.minCoeff(), (-a_min).minCoeff());
}

void AlgoParams::validate() const {
  if (K < 1) fail("K must be >= 1");
  if (kappa < 1 || kappa > K) fail("kappa must satisfy 1 <= kappa <= K");
  if (!(eps_max >= 0.0)) fail("eps_max must be >= 0");
  if (!(eps_check >= eps_max)) fail("eps_check must be >= eps_max");
  if (!(neighbor_radius_factor >= 1.0)) fail("neighbor_radius_factor must be >= 1");
  if (!(T_max > 0.0) || !std::isfinite(T_max)) fail("T_max must be positive");
  if (!(goal_tol > 0.0)) fail("goal_tol must be positive");
  if (!symmetric_positive_definite(Q)) fail("Q must be symmetric positive definite");
  if (!symmetric_positive_definite(R)) fail("R must be symmetric positive definite");
  if (!symmetric_positive_definite(S)) fail("S must be symmetric positive definite");
  if (!(rho_lin > 0.0) || !(zeta_quad > 0.0)) fail("rho_lin and zeta_quad must be positive");
}

int AlgoParams::max_steps(double h) const {
  // Guard against T_max/h landing a hair above an integer.
  return std::max(1, static_cast<int>(std::ceil(T_max / h - 1e-9)));
}

void Scenario::validate() const {
  phys.validate();
  algo.validate();
  if (agents.empty()) throw ModelError("scenario has no agents");
  const double tol = 1e-9;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    if (!finite(a.start) || !finite(a.goal)) throw ModelError("non-finite agent position");
    for (const Vec3* p : {&a.start, &a.goal}) {
      if (((p->array() < phys.p_min.array() - tol) || (p->array() > phys.p_max.array() + tol)).any()) {
        std::ostringstream os;
        os << "agent " << i << " endpoint outside the workspace box";
        throw ModelError(os.str());
      }
    }
    if (a.is_static && (a.start - a.goal).norm() > tol) {
      std::ostringstream os;
      os << "static agent " << i << " must have start == goal";
      throw ModelError(os.str());
    }
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      if (scaled_distance(agents[i].start - agents[j].start, phys) < phys.r_min - tol ||
          scaled_distance(agents[i].goal - agents[j].goal, phys) < phys.r_min - tol) {
        std::ostringstream os;
        os << "agents " << i << " and " << j << " violate the separation margin";
        throw ModelError(os.str());
      }
    }
  }
}

double scaled_distance(const Vec3& d, const PhysParams& phys) {
  const Vec3 s = d.cwiseQuotient(phys.theta());
  if (phys.n_degree == 2) return s.norm();
  const double n = phys.n_degree;
  return std::pow(s.cwiseAbs().array().pow(n).sum(), 1.0 / n);
}

Vec3 PredictionHorizon::at_step(int t, const Vec3& before) const {
  const int idx = t - start_step;
  if (idx < 0 || positions.empty()) return before;
  if (idx >= size()) return positions.back();
  return positions[static_cast<std::size_t>(idx)];
}

PredictionHorizon PredictionHorizon::aligned(int t0, int K, const Vec3& before) const {
  PredictionHorizon out;
  out.start_step = t0;
  out.positions.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) out.positions.push_back(at_step(t0 + k, before));
  return out;
}

AgentState step_dynamics(const AgentState& state, const Vec3& a, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ModelError("step_dynamics: h must be positive");
  if (!finite(state.p) || !finite(state.v) || !finite(a))
    throw ModelError("step_dynamics: non-finite input");
  AgentState next;
  next.p = state.p + h * state.v + 0.5 * h * h * a;
  next.v = state.v + h * a;
  next.a_prev = a;
  return next;
}

PredictionMatrices build_prediction_matrices(int K, double h) {
  if (K < 1) throw ModelError("build_prediction_matrices: K must be >= 1");
  if (!(h > 0.0)) throw ModelError("build_prediction_matrices: h must be positive");

  Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Identity();
  A.topRightCorner<3, 3>() = h * Mat3::Identity();
  Eigen::Matrix<double, 6, 3> B;
  B << 0.5 * h * h * Mat3::Identity(), h * Mat3::Identity();

  PredictionMatrices m;
  m.K = K;
  m.Lambda = Eigen::MatrixXd::Zero(3 * K, 3 * K);
  m.A0 = Eigen::MatrixXd::Zero(3 * K, 6);
  m.Delta = Eigen::MatrixXd::Zero(3 * K, 3 * K);

  // blocks[d] = Psi A^d B; Lambda(r, c) = blocks[r - c]
  std::vector<Mat3> blocks(static_cast<std::size_t>(K));
  Eigen::Matrix<double, 6, 3> AkB = B;
  Eigen::Matrix<double, 6, 6> Ak = A;
  for (int d = 0; d < K; ++d) {
    blocks[static_cast<std::size_t>(d)] = AkB.topRows<3>();
    m.A0.block<3, 6>(3 * d, 0) = Ak.topRows<3>();
    AkB = A * AkB;
    Ak = A * Ak;
  }
  for (int r = 0; r < K; ++r) {
    for (int c = 0; c <= r; ++c)
      m.Lambda.block<3, 3>(3 * r, 3 * c) = blocks[static_cast<std::size_t>(r - c)];
    m.Delta.block<3, 3>(3 * r, 3 * r) = Mat3::Identity();
    if (r > 0) m.Delta.block<3, 3>(3 * r, 3 * (r - 1)) = -Mat3::Identity();
  }
  return m;
}

std::vector<AgentState> propagate(const AgentState& x0, const Eigen::VectorXd& U, double h) {
  const auto K = U.size() / 3;
  std::vector<AgentState> out;
  out.reserve(static_cast<std::size_t>(K));
  AgentState x = x0;
  for (Eigen::Index k = 0; k < K; ++k) {
    x = step_dynamics(x, U.segment<3>(3 * k), h);
    out.push_back(x);
  }
  return out;
}

InitialPlan init_all_predictions(const Scenario& scenario) {
  const int K = scenario.algo.K;
  const double h = scenario.phys.h;
  InitialPlan plan;
  plan.predictions.reserve(scenario.agents.size());
  plan.states.reserve(scenario.agents.size());
  for (const auto& agent : scenario.agents) {
    const Vec3 delta = agent.goal - agent.start;
    const double dist = delta.norm();
    const double speed = dist / scenario.algo.T_max;
    PredictionHorizon pred;
    pred.start_step = 0;
    pred.positions.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
      if (dist == 0.0) {
        pred.positions.push_back(agent.start);
        continue;
      }
      const double s = std::min(speed * h * k, dist);
      pred.positions.push_back(s >= dist ? agent.goal : Vec3(agent.start + (s / dist) * delta));
    }
    plan.predictions.push_back(std::move(pred));
    AgentState st;
    st.p = agent.start;
    plan.states.push_back(st);
  }
  return plan;
}

}  // namespace dmpc
