#pragma once

// Dense strictly convex QP solver (Goldfarb-Idnani dual active-set method):
//
//   minimize 1/2 u'Hu + f'u   subject to   A u <= b
//
// Positive semidefinite but singular H is regularized by a tiny multiple of
// the identity; indefinite H is rejected.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace dmpc {

enum class QpStatus { optimal, infeasible, max_iter };

const char* to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;     ///< ||H u + f + A' lambda||_inf
  double primal = 0.0;           ///< ||max(A u - b, 0)||_inf
  double complementarity = 0.0;  ///< |lambda' (A u - b)|
};

struct QpSolution {
  Eigen::VectorXd u_star;
  Eigen::VectorXd lambda;  ///< one multiplier per inequality row, >= 0
  QpStatus status = QpStatus::max_iter;
  double objective = 0.0;
  std::vector<int> active_rows;
  KktResiduals kkt;
  int iterations = 0;
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Rows expected to be active (e.g. from the previous MPC step). They are
  /// examined first when choosing the next violated constraint.
  std::span<const int> warm_active;
  /// Optional J with J J' = H^-1, e.g. L^-T for H = L L'. Skips the
  /// factorization when the caller solves many problems with the same H.
  const Eigen::MatrixXd* cost_factor = nullptr;
};

/// J = L^-T of H (regularized when H is singular). Throws QpError for
/// indefinite H.
Eigen::MatrixXd inverse_cost_factor(const Eigen::MatrixXd& H);

/// Throws QpError on dimension mismatch or indefinite H.
QpSolution solve_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                    const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    const QpOptions& options = {});

/// Independent post-hoc KKT evaluation.
KktResiduals kkt_residuals(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                           const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& lambda);

}  // namespace dmpc
