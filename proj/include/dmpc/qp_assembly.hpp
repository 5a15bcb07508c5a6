#pragma once

// Per-agent QP data: cost, physical limits, collision detection on the shared
// predictions and the linearized (optionally relaxed) collision rows.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "dmpc/model.hpp"

namespace dmpc {

struct CollisionEvent {
  int neighbor_id = -1;
  int k_c = 1;        ///< 1-based horizon index of the first predicted collision
  double xi = 0.0;    ///< scaled distance at k_c
  Vec3 neighbor_pos = Vec3::Zero();
};

struct NeighborSet {
  std::vector<CollisionEvent> members;
  int n_c() const { return static_cast<int>(members.size()); }
};

struct CollisionDetection {
  int k_c = 1;
  Vec3 own_pos = Vec3::Zero();  ///< own predicted position at k_c (linearization point)
  NeighborSet neighbors;
};

/// Scans the aligned predictions for the first horizon step where the agent
/// comes closer than r_min to any other agent. Neighbours are all agents
/// within neighbor_radius_factor * r_min at that step.
std::optional<CollisionDetection> detect_first_collision(const PredictionHorizon& own,
                                                         std::span<const PredictionHorizon> all,
                                                         int self_id, const PhysParams& phys,
                                                         const AlgoParams& algo);

/// Agents within the neighbour radius at 1-based step k.
NeighborSet neighbors_at(const PredictionHorizon& own, std::span<const PredictionHorizon> all,
                         int self_id, int k, const PhysParams& phys, const AlgoParams& algo);

/// Linearized collision inequality on the position sequence P (3K):
///   mu' P - eps_coeff * eps >= rho
struct CollisionRow {
  int neighbor_id = -1;
  int k_c = 1;
  Vec3 nu = Vec3::Zero();
  Eigen::VectorXd mu;
  double eps_coeff = 0.0;
  double rho = 0.0;
};

/// First-order expansion of ||Theta^-1 (p - p_j)||_n >= r_min + eps around
/// `own_pos`, multiplied through by xi^(n-1). Throws DegenerateGeometryError
/// when xi is zero.
CollisionRow linearize_collision_constraint(const CollisionEvent& event, const Vec3& own_pos,
                                            int K, const PhysParams& phys);

enum class RowKind {
  position_upper,
  position_lower,
  input_upper,
  input_lower,
  collision,
  relax_upper,  ///< eps <= 0
  relax_lower,  ///< -eps <= eps_max
};

/// minimize 1/2 u'Hu + f'u  s.t.  A_in u <= b_in, with u = (U, E).
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  std::vector<RowKind> labels;
  int n_inputs = 0;  ///< 3K
  int n_relax = 0;   ///< number of relaxation variables
  Eigen::MatrixXd J; ///< J J' = H^-1 (J = L^-T up to column order), filled by QpAssembler

  int dim() const { return n_inputs + n_relax; }
  int rows() const { return static_cast<int>(b_in.size()); }
};

struct CostTerms {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
};

/// Caches the state-independent parts of the cost for one parameter set.
class QpAssembler {
 public:
  QpAssembler(PredictionMatrices matrices, PhysParams phys, AlgoParams algo);

  const PredictionMatrices& matrices() const { return m_; }
  const PhysParams& phys() const { return phys_; }
  const AlgoParams& algo() const { return algo_; }

  CostTerms cost(const AgentState& state, const Vec3& goal, int n_relax) const;

  QpProblem plain(const AgentState& state, const Vec3& goal) const;
  /// Soft rows: one relaxation variable per row bounded to [-eps_max, 0].
  QpProblem augmented(const AgentState& state, const Vec3& goal,
                      std::span<const CollisionRow> rows, double eps_max) const;
  /// Hard rows: collision inequalities without relaxation.
  QpProblem hard(const AgentState& state, const Vec3& goal,
                 std::span<const CollisionRow> rows) const;

 private:
  QpProblem limits(const AgentState& state, const Vec3& goal, int n_relax, int extra_rows) const;

  PredictionMatrices m_;
  PhysParams phys_;
  AlgoParams algo_;
  Eigen::MatrixXd H_base_;  ///< 2 (Lambda'Q~Lambda + R~ + Delta'S~Delta)
  Eigen::MatrixXd QL_;      ///< Q~ Lambda
  Eigen::MatrixXd SD_;      ///< S~ Delta
  Eigen::MatrixXd J_base_;  ///< L^-T of H_base_
  Eigen::MatrixXd A_limits_;  ///< [Lambda; -Lambda; I; -I]
};

CostTerms build_cost(const AgentState& state, const Vec3& goal, const PredictionMatrices& matrices,
                     const AlgoParams& algo, int n_relax);

QpProblem build_plain_qp(const AgentState& state, const Vec3& goal,
                         const PredictionMatrices& matrices, const PhysParams& phys,
                         const AlgoParams& algo);

QpProblem build_augmented_qp(const AgentState& state, const Vec3& goal,
                             const PredictionMatrices& matrices, const PhysParams& phys,
                             const AlgoParams& algo, std::span<const CollisionRow> rows,
                             double eps_max);

}  // namespace dmpc
