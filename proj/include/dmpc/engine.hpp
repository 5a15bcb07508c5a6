#pragma once

// Receding-horizon loop over all agents: per-agent QP build/solve on the
// shared prediction buffer, relaxation escalation, state propagation,
// prediction publishing, goal check and post-processing.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "dmpc/model.hpp"
#include "dmpc/postprocess.hpp"
#include "dmpc/qp_assembly.hpp"
#include "dmpc/qp_solver.hpp"

namespace dmpc {

enum class Strategy { soft_on_demand, hard_on_demand, hard_full_horizon };

const char* to_string(Strategy s);
/// Accepts "soft-on-demand" / "soft_on_demand" etc.
std::optional<Strategy> parse_strategy(std::string_view text);

struct Escalation {
  double growth = 2.0;  ///< eps_max multiplier per retry
  int max_retries = 10;
};

struct EngineConfig {
  Strategy strategy = Strategy::soft_on_demand;
  /// 0 runs sequentially on the calling thread; C >= 1 partitions agents
  /// round-robin into C concurrently solved clusters.
  int clusters = 0;
  Escalation escalation;
  std::uint64_t rng_seed = 0;
  bool scale = false;
  bool warm_start = true;
  double qp_tol = 1e-8;
  int qp_max_iter = 200;

  void validate() const;
};

enum class FailureReason { none, timeout, collision_check_failed, qp_unrecoverable };

const char* to_string(FailureReason r);

struct AgentStepInfo {
  int n_c = 0;            ///< collision rows in this agent's QP
  double eps_min = 0.0;   ///< most negative relaxation used
  int retries = 0;        ///< escalation retries
  bool qp_failed = false; ///< fell back to the previous plan
  int qp_iterations = 0;
  double kkt_max = 0.0;   ///< max KKT residual of the accepted solve
};

struct StepDiagnostics {
  std::vector<AgentStepInfo> agents;
  double solve_time_s = 0.0;
};

struct TransitionMetrics {
  double travelled_distance = 0.0;    ///< over the interpolated trajectory [m]
  double straight_line_distance = 0.0;
  double transition_time = 0.0;       ///< first time every agent is inside its goal ball [s]
  double min_scaled_distance = 0.0;   ///< over the interpolated trajectory
  std::vector<double> goal_error;     ///< final distance to goal per agent [m]
};

struct TransitionResult {
  bool success = false;
  FailureReason reason = FailureReason::none;
  int steps = 0;                      ///< engine steps executed
  TrajectorySet discrete;             ///< unscaled, step h
  TrajectorySet output;               ///< scaled (if enabled), step h / gamma
  double gamma = 1.0;
  InterpolatedTrajectory interpolated;
  CollisionReport collision;
  std::vector<StepDiagnostics> diagnostics;
  TransitionMetrics metrics;
  double wall_time_s = 0.0;           ///< engine loop only
  int qp_failures = 0;
  double max_kkt_residual = 0.0;
};

/// Input sequence returned by one agent's solve plus what was learned.
struct AgentSolve {
  std::optional<Eigen::VectorXd> U;  ///< 3K accelerations, empty on failure
  AgentStepInfo info;
  std::vector<int> active_rows;
};

/// Everything an agent's solve needs beyond its own state.
struct SolveContext {
  const QpAssembler& assembler;
  std::span<const PredictionHorizon> predictions;  ///< aligned to the current step
  Strategy strategy;
  const EngineConfig& config;
  std::uint64_t perturbation_seed = 0;
  std::span<const int> warm_active;
};

/// Detects collisions on the shared predictions, builds the QP required by
/// the strategy and solves it, escalating eps_max on infeasibility for the
/// soft strategy.
AgentSolve build_and_solve_qp(int agent_id, const AgentState& state, const Vec3& goal,
                              const SolveContext& ctx);

/// true iff every agent is inside (or on) its goal ball.
bool check_goal(std::span<const Vec3> positions, std::span<const Vec3> goals, double goal_tol);

/// Runs the whole transition. Failures are reported in the result.
TransitionResult run_transition(const Scenario& scenario, const EngineConfig& config);

/// Round-robin assignment of agents to clusters.
std::vector<std::vector<int>> partition_round_robin(int n_agents, int clusters);

/// Mutable per-transition data advanced by one engine step at a time.
struct EngineState {
  int step = 0;                                ///< absolute time index of `states`
  std::vector<AgentState> states;
  std::vector<PredictionHorizon> predictions;  ///< published buffer
  std::vector<Eigen::VectorXd> plans;          ///< last accepted input sequences
  std::vector<int> fallback_streak;
  std::vector<std::vector<int>> warm_active;

  static EngineState initial(const Scenario& scenario);
};

struct StepOutcome {
  StepDiagnostics diagnostics;
  bool unrecoverable = false;
};

/// Advances every agent by one step. Agents are split round-robin into
/// `clusters` groups (0 or 1: one group on the calling thread). Groups run
/// concurrently on private copies of the prediction buffer, members of a group
/// run in index order and see each other's fresh predictions, and all updates
/// are published together when every group has finished.
StepOutcome run_clustered_step(EngineState& state, const Scenario& scenario,
                               const QpAssembler& assembler, const EngineConfig& config,
                               int clusters);

}  // namespace dmpc
