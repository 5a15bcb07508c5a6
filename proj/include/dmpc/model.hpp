#pragma once

// Agent model, parameter sets and the prediction matrices shared by every
// downstream module. Agents are unit-mass double integrators in R^3 with the
// acceleration as input.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dmpc {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

struct PhysParams {
  double h = 0.2;    ///< discretization step [s]
  double Ts = 0.01;  ///< interpolation step [s]
  Vec3 a_min{-1.0, -1.0, -1.0};
  Vec3 a_max{1.0, 1.0, 1.0};
  Vec3 p_min{-1.0, -1.0, 0.0};  ///< workspace box
  Vec3 p_max{1.0, 1.0, 2.0};
  double r_min = 0.35;        ///< collision radius in the xy plane [m]
  double c_ellipsoid = 2.0;   ///< vertical elongation, Theta = diag(1, 1, c)
  int n_degree = 2;           ///< ellipsoid norm degree (even)

  /// Throws ModelError when any invariant is broken.
  void validate() const;

  Vec3 theta() const { return {1.0, 1.0, c_ellipsoid}; }
  /// Largest symmetric per-axis acceleration magnitude allowed by the box.
  double symmetric_accel_limit() const;
};

struct AlgoParams {
  int K = 15;                          ///< horizon length [steps]
  int kappa = 1;                       ///< terminal steps weighted in the error cost
  double eps_max = 0.05;               ///< relaxation bound [m]
  double eps_check = 0.05;             ///< slack of the final safety check [m]
  double neighbor_radius_factor = 3.0; ///< neighbours: xi < factor * r_min
  double T_max = 20.0;                 ///< transition time budget [s]
  double goal_tol = 0.05;              ///< goal ball radius [m]
  Mat3 Q = 100.0 * Mat3::Identity();   ///< trajectory error weight
  Mat3 R = 1.0 * Mat3::Identity();     ///< control effort weight
  Mat3 S = 10.0 * Mat3::Identity();    ///< input variation weight
  double rho_lin = 1.0e3;              ///< linear relaxation penalty
  double zeta_quad = 1.0e2;            ///< quadratic relaxation penalty

  void validate() const;
  /// ceil(T_max / h)
  int max_steps(double h) const;
};

struct AgentState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a_prev = Vec3::Zero();  ///< input applied on the previous step

  Vec6 x() const {
    Vec6 out;
    out << p, v;
    return out;
  }
};

/// Positions an agent expects to occupy over the horizon. `start_step` is the
/// absolute time index of `positions.front()`.
struct PredictionHorizon {
  int start_step = 0;
  std::vector<Vec3> positions;

  int size() const { return static_cast<int>(positions.size()); }
  /// Position at absolute step `t`. Steps before the horizon fall back to
  /// `before`, steps past its end hold the last prediction.
  Vec3 at_step(int t, const Vec3& before) const;
  /// K positions covering steps [t0, t0 + K).
  PredictionHorizon aligned(int t0, int K, const Vec3& before) const;
};

struct PredictionMatrices {
  int K = 0;
  Eigen::MatrixXd Lambda;  ///< 3K x 3K, input -> positions
  Eigen::MatrixXd A0;      ///< 3K x 6, initial state -> positions
  Eigen::MatrixXd Delta;   ///< 3K x 3K, first-difference operator
};

struct AgentSpec {
  Vec3 start = Vec3::Zero();
  Vec3 goal = Vec3::Zero();
  bool is_static = false;
};

struct Scenario {
  std::string id = "scenario";
  std::vector<AgentSpec> agents;
  PhysParams phys;
  AlgoParams algo;
  std::optional<std::uint64_t> seed;

  int size() const { return static_cast<int>(agents.size()); }
  /// Parameter invariants plus box membership, static => start == goal and
  /// pairwise separation of starts and of goals.
  void validate() const;
};

/// ||Theta^-1 d||_n
double scaled_distance(const Vec3& d, const PhysParams& phys);

/// One step of the double integrator: p' = p + h v + h^2/2 a, v' = v + h a.
AgentState step_dynamics(const AgentState& state, const Vec3& a, double h);

/// Lambda, A0 and Delta for horizon K and step h.
PredictionMatrices build_prediction_matrices(int K, double h);

/// Positions reached from `x0` under the stacked inputs `U` (3K), by iterating
/// the model. Used for publishing predictions.
std::vector<AgentState> propagate(const AgentState& x0, const Eigen::VectorXd& U,
                                  double h);

struct InitialPlan {
  std::vector<PredictionHorizon> predictions;
  std::vector<AgentState> states;
};

/// Straight-line seed predictions (constant speed covering start->goal in
/// T_max, clamped at the goal) and zero-velocity initial states.
InitialPlan init_all_predictions(const Scenario& scenario);

}  // namespace dmpc
