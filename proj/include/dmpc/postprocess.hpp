#pragma once

// Post-processing of a finished transition: optional time scaling, exact
// zero-order-hold interpolation and the final pairwise safety check.

#include <optional>
#include <vector>

#include "dmpc/model.hpp"

namespace dmpc {

/// Discrete trajectory of one agent. a[k] is applied over [k h, (k+1) h);
/// the last entry of `a` is zero.
struct AgentTrajectory {
  std::vector<Vec3> p, v, a;
  int size() const { return static_cast<int>(p.size()); }
};

struct TrajectorySet {
  double h = 0.2;
  std::vector<AgentTrajectory> agents;
  int samples() const { return agents.empty() ? 0 : agents.front().size(); }
};

struct Sample {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

struct InterpolatedTrajectory {
  double Ts = 0.01;
  std::vector<std::vector<Sample>> agents;
  int samples() const { return agents.empty() ? 0 : static_cast<int>(agents.front().size()); }
};

struct ScaledTrajectory {
  TrajectorySet trajectory;
  double gamma = 1.0;
};

/// Uniform speed-up t -> t / gamma so that the peak acceleration component
/// reaches `a_limit`. Identity when already at or above the limit, or when
/// every acceleration is zero.
ScaledTrajectory scale_trajectory(const TrajectorySet& traj, double a_limit);

/// Samples every agent at spacing Ts, holding the acceleration constant inside
/// each coarse interval and integrating the double integrator exactly.
InterpolatedTrajectory interpolate(const TrajectorySet& traj, double Ts);

struct CollisionViolation {
  int agent_i = -1;
  int agent_j = -1;
  int sample = -1;
  double t = 0.0;
  double distance = 0.0;
};

struct CollisionReport {
  bool pass = true;
  std::optional<CollisionViolation> first;  ///< earliest violation (time, then pair)
  CollisionViolation closest;               ///< global minimum scaled distance
};

/// Brute-force scan of every pair at every sample; O(N^2 * samples).
/// Passes iff ||Theta^-1 (p_i - p_j)||_n >= r_min - eps_check everywhere.
CollisionReport check_collisions(const InterpolatedTrajectory& traj, double r_min,
                                 double eps_check, const PhysParams& phys);

/// Sum over agents of the polyline length through the samples.
double travelled_distance(const InterpolatedTrajectory& traj);

}  // namespace dmpc
