#include "dmpc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "dmpc/error.hpp"

namespace dmpc {

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Working data of the dual active-set iteration. Constraints are handled in
// the form s_i(u) = b_i - A_i u >= 0, i.e. normal n_i = -A_i'.
class DualActiveSet {
 public:
  DualActiveSet(Eigen::MatrixXd J, const Eigen::MatrixXd& A, const Eigen::VectorXd& b)
      : A_(A), b_(b), n_(J.rows()), J_(std::move(J)) {
    R_ = Eigen::MatrixXd::Zero(n_, n_);
    active_.reserve(static_cast<std::size_t>(n_));
    u_.reserve(static_cast<std::size_t>(n_));
  }

  const Eigen::MatrixXd& J() const { return J_; }
  int size() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active() const { return active_; }
  std::vector<double>& duals() { return u_; }

  // d = J' n_p with n_p = -A_p'
  Eigen::VectorXd transformed_normal(int p) const { return -(J_.transpose() * A_.row(p).transpose()); }

  Eigen::VectorXd primal_direction(const Eigen::VectorXd& d) const {
    const int q = size();
    return J_.rightCols(n_ - q) * d.tail(n_ - q);
  }

  Eigen::VectorXd dual_direction(const Eigen::VectorXd& d) const {
    const int q = size();
    if (q == 0) return {};
    return R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));
  }

  // Appends constraint p; `d` is J' n_p before the update. Returns false on
  // linear dependence.
  bool add(int p, Eigen::VectorXd d, double u_p) {
    const int q = size();
    for (int j = n_ - 1; j >= q + 1; --j) {
      double cc = d[j - 1];
      double ss = d[j];
      if (ss == 0.0) continue;
      const double hyp = std::hypot(cc, ss);
      if (hyp < kEps) continue;
      d[j] = 0.0;
      ss /= hyp;
      cc /= hyp;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d[j - 1] = -hyp;
      } else {
        d[j - 1] = hyp;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    R_.col(q).head(q + 1) = d.head(q + 1);
    active_.push_back(p);
    u_.push_back(u_p);
    if (std::abs(d[q]) <= kEps * r_norm_) return false;
    r_norm_ = std::max(r_norm_, std::abs(d[q]));
    return true;
  }

  // Removes the constraint at active position `pos` and restores the upper
  // triangular shape of R with Givens rotations mirrored onto J.
  void remove(int pos) {
    const int q = size();
    for (int i = pos; i < q - 1; ++i) R_.col(i) = R_.col(i + 1);
    R_.col(q - 1).setZero();
    active_.erase(active_.begin() + pos);
    u_.erase(u_.begin() + pos);
    const int nq = q - 1;
    for (int j = pos; j < nq; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double hyp = std::hypot(cc, ss);
      if (hyp < kEps) continue;
      cc /= hyp;
      ss /= hyp;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -hyp;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = hyp;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = j + 1; k < nq; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (int k = 0; k < n_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

 private:
  const Eigen::MatrixXd& A_;
  const Eigen::VectorXd& b_;
  Eigen::Index n_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  double r_norm_ = 1.0;
  std::vector<int> active_;
  std::vector<double> u_;
};

Eigen::MatrixXd factor_cost(const Eigen::MatrixXd& H) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd L = llt.matrixL();
    if ((L.diagonal().array() > 0.0).all() && L.allFinite()) return L;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-9 * scale) {
    std::ostringstream os;
    os << "solve_qp: cost matrix is not positive semidefinite (min eigenvalue " << min_eig << ")";
    throw QpError(os.str());
  }
  const double delta = std::abs(min_eig) + 1e-10 * scale;
  Eigen::LLT<Eigen::MatrixXd> reg(H + delta * Eigen::MatrixXd::Identity(H.rows(), H.cols()));
  if (reg.info() != Eigen::Success) throw QpError("solve_qp: regularized factorization failed");
  return reg.matrixL();
}

}  // namespace

Eigen::MatrixXd inverse_cost_factor(const Eigen::MatrixXd& H) {
  const Eigen::MatrixXd L = factor_cost(0.5 * (H + H.transpose()));
  const auto n = L.rows();
  // J = L^-T, so that J J' = H^-1.
  return L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n)).transpose();
}

KktResiduals kkt_residuals(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                           const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& u, const Eigen::VectorXd& lambda) {
  KktResiduals r;
  Eigen::VectorXd grad = H * u + f;
  if (A.rows() > 0) grad += A.transpose() * lambda;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (A.rows() > 0) {
    const Eigen::VectorXd slack = A * u - b;
    r.primal = std::max(0.0, slack.maxCoeff());
    r.complementarity = std::abs(lambda.dot(slack));
  }
  return r;
}

QpSolution solve_qp(const Eigen::MatrixXd& H_in, const Eigen::VectorXd& f,
                    const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    const QpOptions& options) {
  const Eigen::Index n = H_in.rows();
  if (n == 0 || H_in.cols() != n || f.size() != n || A.cols() != n || A.rows() != b.size())
    throw QpError("solve_qp: inconsistent problem dimensions");
  // x * 0 is NaN exactly for non-finite x; one vectorized pass per operand.
  auto finite = [](const auto& M) { return M.size() == 0 || (M.array() * 0.0).sum() == 0.0; };
  if (!finite(H_in) || !finite(f) || !finite(A) || !finite(b))
    throw QpError("solve_qp: non-finite problem data");
  const Eigen::MatrixXd H = 0.5 * (H_in + H_in.transpose());
  const int m = static_cast<int>(A.rows());

  const bool given = options.cost_factor && options.cost_factor->rows() == n &&
                     options.cost_factor->cols() == n;
  DualActiveSet ws(given ? *options.cost_factor : inverse_cost_factor(H), A, b);

  QpSolution sol;
  // Unconstrained minimizer.
  Eigen::VectorXd x = -(ws.J() * (ws.J().transpose() * f));
  const double viol_tol = 1e-2 * options.tol;

  std::vector<char> is_active(static_cast<std::size_t>(m), 0);
  Eigen::VectorXd slack(m);
  int iter = 0;
  bool done = false;

  // Hinted rows are tried first and only their slacks are evaluated; the full
  // scan runs once none of them is violated.
  auto pick_violated = [&]() -> int {
    int best = -1;
    double worst = -viol_tol;
    for (int i : options.warm_active) {
      if (i < 0 || i >= m || is_active[static_cast<std::size_t>(i)]) continue;
      const double si = b[i] - A.row(i).dot(x);
      if (si < worst) {
        worst = si;
        best = i;
      }
    }
    if (best >= 0) {
      slack[best] = worst;
      return best;
    }
    slack.noalias() = b - A * x;
    for (int i = 0; i < m; ++i) {
      if (is_active[static_cast<std::size_t>(i)]) continue;
      if (slack[i] < worst) {
        worst = slack[i];
        best = i;
      }
    }
    return best;
  };

  while (!done) {
    const int p = pick_violated();
    if (p < 0) {
      sol.status = QpStatus::optimal;
      break;
    }
    double u_p = 0.0;
    double s_p = slack[p];
    // Inner loop: drive constraint p to activity, dropping blockers.
    while (true) {
      if (++iter > options.max_iter) {
        sol.status = QpStatus::max_iter;
        done = true;
        break;
      }
      const Eigen::VectorXd d = ws.transformed_normal(p);
      const Eigen::VectorXd z = ws.primal_direction(d);
      const Eigen::VectorXd r = ws.dual_direction(d);
      auto& u = ws.duals();
      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < ws.size(); ++j) {
        if (r[j] > 0.0) {
          const double ratio = u[static_cast<std::size_t>(j)] / r[j];
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
      }
      // n_p' z with n_p = -A_p'
      const double nz = -A.row(p).dot(z);
      const double t2 = (z.squaredNorm() > kEps * kEps && nz > 0.0) ? -s_p / nz : kInf;
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        sol.status = QpStatus::infeasible;
        done = true;
        break;
      }
      for (int j = 0; j < ws.size(); ++j) u[static_cast<std::size_t>(j)] -= t * r[j];
      u_p += t;
      if (!std::isfinite(t2)) {
        // Dual step only.
        is_active[static_cast<std::size_t>(ws.active()[static_cast<std::size_t>(drop)])] = 0;
        ws.remove(drop);
        continue;
      }
      x += t * z;
      if (t == t2) {
        if (!ws.add(p, d, u_p)) {
          // Linearly dependent with the active set.
          sol.status = QpStatus::infeasible;
          done = true;
        } else {
          is_active[static_cast<std::size_t>(p)] = 1;
        }
        break;
      }
      is_active[static_cast<std::size_t>(ws.active()[static_cast<std::size_t>(drop)])] = 0;
      ws.remove(drop);
      s_p = b[p] - A.row(p).dot(x);
    }
  }

  sol.iterations = iter;
  sol.u_star = x;
  sol.lambda = Eigen::VectorXd::Zero(m);
  for (int j = 0; j < ws.size(); ++j) {
    const int row = ws.active()[static_cast<std::size_t>(j)];
    sol.lambda[row] = std::max(0.0, ws.duals()[static_cast<std::size_t>(j)]);
    sol.active_rows.push_back(row);
  }
  std::sort(sol.active_rows.begin(), sol.active_rows.end());
  sol.objective = 0.5 * x.dot(H * x) + f.dot(x);
  sol.kkt = kkt_residuals(H, f, A, b, x, sol.lambda);
  return sol;
}

}  // namespace dmpc
