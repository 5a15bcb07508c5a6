#include "dmpc/qp_assembly.hpp"

#include <cmath>

#include "dmpc/error.hpp"
#include "dmpc/qp_solver.hpp"

namespace dmpc {

std::optional<CollisionDetection> detect_first_collision(const PredictionHorizon& own,
                                                         std::span<const PredictionHorizon> all,
                                                         int self_id, const PhysParams& phys,
                                                         const AlgoParams& algo) {
  const int K = own.size();
  for (int k = 0; k < K; ++k) {
    const Vec3& pi = own.positions[static_cast<std::size_t>(k)];
    for (int j = 0; j < static_cast<int>(all.size()); ++j) {
      if (j == self_id) continue;
      const Vec3& pj = all[static_cast<std::size_t>(j)].positions[static_cast<std::size_t>(k)];
      if (scaled_distance(pi - pj, phys) < phys.r_min) {
        CollisionDetection det;
        det.k_c = k + 1;
        det.own_pos = pi;
        det.neighbors = neighbors_at(own, all, self_id, k + 1, phys, algo);
        return det;
      }
    }
  }
  return std::nullopt;
}

NeighborSet neighbors_at(const PredictionHorizon& own, std::span<const PredictionHorizon> all,
                         int self_id, int k, const PhysParams& phys, const AlgoParams& algo) {
  NeighborSet set;
  const double radius = algo.neighbor_radius_factor * phys.r_min;
  const auto idx = static_cast<std::size_t>(k - 1);
  const Vec3& pi = own.positions[idx];
  for (int j = 0; j < static_cast<int>(all.size()); ++j) {
    if (j == self_id) continue;
    const Vec3& pj = all[static_cast<std::size_t>(j)].positions[idx];
    const double xi = scaled_distance(pi - pj, phys);
    if (xi < radius) set.members.push_back(CollisionEvent{j, k, xi, pj});
  }
  return set;
}

CollisionRow linearize_collision_constraint(const CollisionEvent& event, const Vec3& own_pos,
                                            int K, const PhysParams& phys) {
  if (event.k_c < 1 || event.k_c > K) throw ModelError("collision step outside the horizon");
  const Vec3 diff = own_pos - event.neighbor_pos;
  const double xi = scaled_distance(diff, phys);
  if (!(xi > 1e-12)) throw DegenerateGeometryError("coincident predicted positions");

  const int n = phys.n_degree;
  const Vec3 theta = phys.theta();
  CollisionRow row;
  row.neighbor_id = event.neighbor_id;
  row.k_c = event.k_c;
  for (int l = 0; l < 3; ++l) row.nu[l] = std::pow(diff[l], n - 1) / std::pow(theta[l], n);
  const double xi_n1 = std::pow(xi, n - 1);
  row.eps_coeff = xi_n1;
  row.rho = phys.r_min * xi_n1 - xi_n1 * xi + row.nu.dot(own_pos);
  row.mu = Eigen::VectorXd::Zero(3 * K);
  row.mu.segment<3>(3 * (event.k_c - 1)) = row.nu;
  return row;
}

QpAssembler::QpAssembler(PredictionMatrices matrices, PhysParams phys, AlgoParams algo)
    : m_(std::move(matrices)), phys_(std::move(phys)), algo_(std::move(algo)) {
  const int K = m_.K;
  if (algo_.K != K) throw ModelError("QpAssembler: horizon mismatch");
  const int n = 3 * K;
  Eigen::MatrixXd Qt = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd Rt = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd St = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < K; ++k) {
    if (k >= K - algo_.kappa) Qt.block<3, 3>(3 * k, 3 * k) = algo_.Q;
    Rt.block<3, 3>(3 * k, 3 * k) = algo_.R;
    St.block<3, 3>(3 * k, 3 * k) = algo_.S;
  }
  QL_ = Qt * m_.Lambda;
  SD_ = St * m_.Delta;
  H_base_ = 2.0 * (m_.Lambda.transpose() * QL_ + Rt + m_.Delta.transpose() * SD_);
  H_base_ = 0.5 * (H_base_ + H_base_.transpose());
  J_base_ = inverse_cost_factor(H_base_);
  A_limits_.resize(4 * n, n);
  A_limits_ << m_.Lambda, -m_.Lambda, Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
}

CostTerms QpAssembler::cost(const AgentState& state, const Vec3& goal, int n_relax) const {
  const int n = 3 * m_.K;
  const int d = n + n_relax;
  CostTerms c;
  c.H = Eigen::MatrixXd::Zero(d, d);
  c.H.topLeftCorner(n, n) = H_base_;
  if (n_relax > 0)
    c.H.bottomRightCorner(n_relax, n_relax) =
        2.0 * algo_.zeta_quad * Eigen::MatrixXd::Identity(n_relax, n_relax);

  const Eigen::VectorXd Pd = goal.replicate(m_.K, 1);
  const Eigen::VectorXd free_motion = m_.A0 * state.x();
  Eigen::VectorXd U_star = Eigen::VectorXd::Zero(n);
  U_star.head<3>() = state.a_prev;

  c.f = Eigen::VectorXd::Zero(d);
  c.f.head(n) = -2.0 * (QL_.transpose() * (Pd - free_motion) + SD_.transpose() * U_star);
  if (n_relax > 0) c.f.tail(n_relax).setConstant(-algo_.rho_lin);
  return c;
}

QpProblem QpAssembler::limits(const AgentState& state, const Vec3& goal, int n_relax,
                              int extra_rows) const {
  const int K = m_.K;
  const int n = 3 * K;
  QpProblem qp;
  qp.n_inputs = n;
  qp.n_relax = n_relax;
  auto c = cost(state, goal, n_relax);
  qp.H = std::move(c.H);
  qp.f = std::move(c.f);
  // The relaxation block of H is 2 zeta I, so the factor is block diagonal
  // up to a column permutation. Putting the relaxation columns first makes
  // activating an eps bound a short Givens sweep in the solver.
  if (n_relax == 0) {
    qp.J = J_base_;
  } else {
    qp.J = Eigen::MatrixXd::Zero(n + n_relax, n + n_relax);
    qp.J.topRightCorner(n, n) = J_base_;
    qp.J.bottomLeftCorner(n_relax, n_relax).diagonal().setConstant(1.0 / std::sqrt(2.0 * algo_.zeta_quad));
  }

  const int rows = 4 * n + extra_rows;
  const int cols = n + n_relax;
  qp.A_in.resize(rows, cols);
  qp.A_in.topLeftCorner(4 * n, n) = A_limits_;
  if (n_relax > 0) qp.A_in.topRightCorner(4 * n, n_relax).setZero();
  if (extra_rows > 0) qp.A_in.bottomRows(extra_rows).setZero();
  qp.b_in.resize(rows);
  qp.labels.reserve(static_cast<std::size_t>(rows));

  const Eigen::VectorXd free_motion = m_.A0 * state.x();
  for (int k = 0; k < K; ++k) {
    const Vec3 pk = free_motion.segment<3>(3 * k);
    qp.b_in.segment<3>(3 * k) = phys_.p_max - pk;
    qp.b_in.segment<3>(n + 3 * k) = pk - phys_.p_min;
    qp.b_in.segment<3>(2 * n + 3 * k) = phys_.a_max;
    qp.b_in.segment<3>(3 * n + 3 * k) = -phys_.a_min;
  }
  if (extra_rows > 0) qp.b_in.tail(extra_rows).setZero();
  for (RowKind kind : {RowKind::position_upper, RowKind::position_lower, RowKind::input_upper,
                       RowKind::input_lower})
    qp.labels.insert(qp.labels.end(), static_cast<std::size_t>(n), kind);
  return qp;
}

QpProblem QpAssembler::plain(const AgentState& state, const Vec3& goal) const {
  return limits(state, goal, 0, 0);
}

QpProblem QpAssembler::augmented(const AgentState& state, const Vec3& goal,
                                 std::span<const CollisionRow> rows, double eps_max) const {
  const int n = 3 * m_.K;
  const int nc = static_cast<int>(rows.size());
  QpProblem qp = limits(state, goal, nc, 3 * nc);
  const Eigen::VectorXd free_motion = m_.A0 * state.x();
  int r = 4 * n;
  for (int i = 0; i < nc; ++i, ++r) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    qp.A_in.row(r).head(n) = -(row.nu.transpose() * m_.Lambda.middleRows(3 * (row.k_c - 1), 3));
    qp.A_in(r, n + i) = row.eps_coeff;
    qp.b_in[r] = -row.rho + row.nu.dot(free_motion.segment<3>(3 * (row.k_c - 1)));
    qp.labels.push_back(RowKind::collision);
  }
  for (int i = 0; i < nc; ++i, ++r) {
    qp.A_in(r, n + i) = 1.0;
    qp.b_in[r] = 0.0;
    qp.labels.push_back(RowKind::relax_upper);
  }
  for (int i = 0; i < nc; ++i, ++r) {
    qp.A_in(r, n + i) = -1.0;
    qp.b_in[r] = eps_max;
    qp.labels.push_back(RowKind::relax_lower);
  }
  return qp;
}

QpProblem QpAssembler::hard(const AgentState& state, const Vec3& goal,
                            std::span<const CollisionRow> rows) const {
  const int n = 3 * m_.K;
  const int nc = static_cast<int>(rows.size());
  QpProblem qp = limits(state, goal, 0, nc);
  const Eigen::VectorXd free_motion = m_.A0 * state.x();
  for (int i = 0; i < nc; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    qp.A_in.row(4 * n + i) = -(row.nu.transpose() * m_.Lambda.middleRows(3 * (row.k_c - 1), 3));
    qp.b_in[4 * n + i] = -row.rho + row.nu.dot(free_motion.segment<3>(3 * (row.k_c - 1)));
    qp.labels.push_back(RowKind::collision);
  }
  return qp;
}

CostTerms build_cost(const AgentState& state, const Vec3& goal, const PredictionMatrices& matrices,
                     const AlgoParams& algo, int n_relax) {
  return QpAssembler(matrices, PhysParams{}, algo).cost(state, goal, n_relax);
}

QpProblem build_plain_qp(const AgentState& state, const Vec3& goal,
                         const PredictionMatrices& matrices, const PhysParams& phys,
                         const AlgoParams& algo) {
  return QpAssembler(matrices, phys, algo).plain(state, goal);
}

QpProblem build_augmented_qp(const AgentState& state, const Vec3& goal,
                             const PredictionMatrices& matrices, const PhysParams& phys,
                             const AlgoParams& algo, std::span<const CollisionRow> rows,
                             double eps_max) {
  return QpAssembler(matrices, phys, algo).augmented(state, goal, rows, eps_max);
}

}  // namespace dmpc
