#pragma once

// Scenario files, parameter presets, random scenario generation, run metrics
// and the trajectory CSV format.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmpc/engine.hpp"
#include "dmpc/model.hpp"

namespace dmpc {

inline constexpr int kScenarioFormat = 1;

/// Parameter presets: "default" (h = 0.2, K = 15, r_min = 0.35, ...),
/// "dense" (default with kappa = 2) and "small" (r_min = 0.25,
/// eps_check = 0.03). Returns nullopt for an unknown name.
struct Preset {
  PhysParams phys;
  AlgoParams algo;
};
std::optional<Preset> find_preset(std::string_view name);

/// Parses a scenario document. `where` names the source in error messages.
/// Throws SchemaError with a JSON pointer or line:column location.
Scenario parse_scenario(std::string_view text, const std::string& where = "<scenario>");
std::string scenario_to_json(const Scenario& scenario);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

/// Applies a JSON merge patch of the form {"phys": {...}, "algo": {...}} to
/// the parameters of `scenario`; unknown keys are schema errors.
void apply_config_override(Scenario& scenario, std::string_view patch,
                           const std::string& where = "<config>");

struct GenerateOptions {
  int n = 4;
  std::optional<Vec3> box;         ///< box edge lengths, centred on the origin
  std::optional<double> density;   ///< agents per m^3, cube side (n / density)^(1/3)
  std::uint64_t seed = 0;
  PhysParams phys;
  AlgoParams algo;
  int point_attempts = 20000;      ///< rejection draws per point
  int restarts = 20;               ///< full restarts before giving up
};

/// Rejection-samples starts and goals with pairwise scaled distance >= r_min
/// inside the box. Deterministic per seed. Throws GenerationError.
Scenario generate_random_scenario(const GenerateOptions& options);

struct RunMetrics {
  bool success = false;
  FailureReason reason = FailureReason::none;
  double transition_time = 0.0;
  double wall_time = 0.0;
  double travelled_distance = 0.0;
  double straight_line_distance = 0.0;
  double min_scaled_distance = 0.0;
  std::vector<double> goal_error;
  int steps = 0;
  double gamma = 1.0;
  int qp_failures = 0;
  double max_kkt_residual = 0.0;

  double distance_ratio() const {
    return straight_line_distance > 0.0 ? travelled_distance / straight_line_distance : 1.0;
  }
};

RunMetrics compute_metrics(const TransitionResult& result, const Scenario& scenario);

/// Metrics object, optionally with the per-step diagnostics of `result`.
std::string metrics_to_json(const RunMetrics& metrics, const TransitionResult* result = nullptr);

/// Header `agent_id,t,px,py,pz,vx,vy,vz,ax,ay,az`; rows grouped by agent, 9
/// significant digits.
void write_trajectory_csv(std::ostream& out, const InterpolatedTrajectory& traj);
void write_trajectory_csv(const std::string& path, const InterpolatedTrajectory& traj);

/// Strict reader for the format above. Throws SchemaError with line numbers.
InterpolatedTrajectory read_trajectory_csv(std::istream& in, const std::string& where = "<csv>");
InterpolatedTrajectory read_trajectory_csv(const std::string& path);

struct CheckReport {
  bool pass = false;
  CollisionReport collision;
  std::vector<int> agents_off_goal;
  std::string message;
};

/// Safety and goal verification of a stored trajectory against its scenario.
CheckReport check_trajectory(const InterpolatedTrajectory& traj, const Scenario& scenario);

}  // namespace dmpc
