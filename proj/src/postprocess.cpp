#include "dmpc/postprocess.hpp"

#include <cmath>
#include <limits>

#include "dmpc/error.hpp"

namespace dmpc {

ScaledTrajectory scale_trajectory(const TrajectorySet& traj, double a_limit) {
  if (!(a_limit > 0.0)) throw ModelError("scale_trajectory: a_limit must be positive");
  ScaledTrajectory out{traj, 1.0};
  double peak = 0.0;
  for (const auto& agent : traj.agents)
    for (const auto& a : agent.a) peak = std::max(peak, a.cwiseAbs().maxCoeff());
  if (peak <= 0.0) return out;
  const double gamma = std::sqrt(a_limit / peak);
  if (gamma <= 1.0) return out;

  out.gamma = gamma;
  out.trajectory.h = traj.h / gamma;
  for (auto& agent : out.trajectory.agents) {
    for (auto& v : agent.v) v *= gamma;
    for (auto& a : agent.a) a *= gamma * gamma;
  }
  return out;
}

InterpolatedTrajectory interpolate(const TrajectorySet& traj, double Ts) {
  if (!(Ts > 0.0)) throw ModelError("interpolate: Ts must be positive");
  InterpolatedTrajectory out;
  out.Ts = Ts;
  const int n = traj.samples();
  if (n == 0) return out;
  const double h = traj.h;
  const double duration = (n - 1) * h;
  const double ratio = h / Ts;
  const long per_interval = std::lround(ratio);
  // When Ts divides h the sample->interval mapping is done in integers so
  // that grid points land exactly on the discrete samples.
  const bool aligned = per_interval > 0 && std::abs(ratio - static_cast<double>(per_interval)) < 1e-9;
  const long count = aligned ? (n - 1) * per_interval + 1
                             : static_cast<long>(std::floor(duration / Ts + 1e-9)) + 1;

  out.agents.resize(traj.agents.size());
  for (std::size_t i = 0; i < traj.agents.size(); ++i) {
    const auto& ag = traj.agents[i];
    auto& samples = out.agents[i];
    samples.reserve(static_cast<std::size_t>(count));
    for (long s = 0; s < count; ++s) {
      long k;
      double tau;
      if (aligned) {
        k = s / per_interval;
        tau = static_cast<double>(s % per_interval) * Ts;
      } else {
        const double t = static_cast<double>(s) * Ts;
        k = std::min<long>(static_cast<long>(std::floor(t / h)), n - 1);
        tau = t - static_cast<double>(k) * h;
      }
      if (k >= n - 1) {
        k = n - 1;
        if (aligned) tau = 0.0;
      }
      const auto ku = static_cast<std::size_t>(k);
      const Vec3& a = ag.a[ku];
      Sample smp;
      smp.t = static_cast<double>(s) * Ts;
      smp.p = ag.p[ku] + tau * ag.v[ku] + 0.5 * tau * tau * a;
      smp.v = ag.v[ku] + tau * a;
      smp.a = a;
      samples.push_back(smp);
    }
  }
  return out;
}

CollisionReport check_collisions(const InterpolatedTrajectory& traj, double r_min,
                                 double eps_check, const PhysParams& phys) {
  CollisionReport rep;
  rep.closest.distance = std::numeric_limits<double>::infinity();
  const double threshold = r_min - eps_check;
  const int N = static_cast<int>(traj.agents.size());
  const int S = traj.samples();
  for (const auto& a : traj.agents)
    if (static_cast<int>(a.size()) != S)
      throw ModelError("check_collisions: trajectories have different lengths");
  for (int s = 0; s < S; ++s) {
    const auto su = static_cast<std::size_t>(s);
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        const auto& si = traj.agents[static_cast<std::size_t>(i)][su];
        const auto& sj = traj.agents[static_cast<std::size_t>(j)][su];
        const double d = scaled_distance(si.p - sj.p, phys);
        if (d < rep.closest.distance) rep.closest = {i, j, s, si.t, d};
        if (d < threshold && !rep.first) {
          rep.pass = false;
          rep.first = CollisionViolation{i, j, s, si.t, d};
        }
      }
    }
  }
  return rep;
}

double travelled_distance(const InterpolatedTrajectory& traj) {
  double total = 0.0;
  for (const auto& agent : traj.agents)
    for (std::size_t s = 1; s < agent.size(); ++s) total += (agent[s].p - agent[s - 1].p).norm();
  return total;
}

}  // namespace dmpc
