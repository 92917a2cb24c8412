#pragma once

#include "daadmm/consensus_admm.hpp"
#include "daadmm/delay_network.hpp"
#include "daadmm/scenarios.hpp"
#include "daadmm/trajectory.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace daadmm::planning {

class PlanningError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { DA, LB, RB, FP, FCOpt };
enum class Mode { TrajOpt, MPC };
enum class FailureReason { None, Collision, Infeasible, Timeout, GoalNotReached, Crash };

std::string to_string(Method method);
std::string to_string(Mode mode);
std::string to_string(FailureReason reason);
Method method_from_string(const std::string& name);
Mode mode_from_string(const std::string& name);

inline constexpr double kGoalTolerance = 0.1;
inline constexpr double kActivationFactor = 3.0;  // FC-Opt activation radius / d_safe
inline constexpr double kDeadlockWindow = 2.0;    // seconds
inline constexpr double kDeadlockMotion = 0.05;  // state change per window
inline constexpr double kParkedSpeed = 0.05;  // Dubins plans slower than this count as parked

/// Tracking weights used for single-shot trajectory optimization: the default
/// weights scaled by 0.1 with a 1000x terminal multiplier.
admm::CostWeights trajopt_cost(ModelKind kind);
/// Receding-horizon weights: the default weights scaled by 0.01 with a 100x
/// terminal multiplier; Dubins heading is left free.
admm::CostWeights mpc_cost(ModelKind kind);

struct PlanRequest {
  scenarios::Scenario scenario;
  Method method = Method::DA;
  delay::DelayConfig delay;
  Mode mode = Mode::TrajOpt;
  int iterations = 30;
  int sqp_iters = 5;
  std::uint64_t seed = 0;
  int n_neigh = -1;  // -1: every other agent
  double rho_x = 0.1;
  double rho_u = 0.001;
  std::optional<admm::CostWeights> cost;  // defaults depend on the mode
  double collision_margin = 0.04;         // planning-only inflation of d_safe
  double guess_offset = 0.4;              // keep-right bulge of the first guess
  std::optional<double> time_limit;       // simulated seconds; 40, or 19.9 for drones
  int tasks_per_agent = 1;                // warehouse tasks before an agent is done
  bool warm_start_duals = true;           // MPC: carry multipliers between cycles

  void validate() const;
  admm::CostWeights resolved_cost() const;
  double resolved_time_limit() const;
  int resolved_neighbors() const;
};

struct TrialResult {
  bool success = false;
  double makespan = 0.0;
  double total_cost = 0.0;
  double final_primal = 0.0;
  double final_dual = 0.0;
  double comp_time = 0.0;  // wall-clock solve seconds
  FailureReason failure_reason = FailureReason::None;
  std::uint64_t seed = 0;
  std::uint64_t delay_trace_hash = 0;
  int steps = 0;
  long long messages = 0;
  double min_distance = 0.0;
  double max_goal_error = 0.0;
  double max_shift_error = 0.0;  // MPC: previous plan vs realized state, one step ahead
  int fallback_steps = 0;
};

/// Straight line from x0 to goal whose positions bulge sideways by
/// offset*sin(pi k/K) to the right of the travel direction (planar models).
Trajectory keep_right_guess(const Eigen::VectorXd& x0, const Eigen::VectorXd& goal, int n_u, int horizon,
                            double offset, int position_dim);

admm::PenaltyStrategy strategy_for(const PlanRequest& request);

/// Consensus problem for single-shot planning from the scenario starts.
admm::ConsensusProblem make_trajopt_problem(const PlanRequest& request);

TrialResult solve_trajopt(const PlanRequest& request);

/// Indices of the n_neigh nearest other agents (ties: lower index), self first.
std::vector<std::vector<int>> nearest_neighbors(std::span<const Eigen::VectorXd> positions, int n_neigh);

/// Like nearest_neighbors, ranked by the closest approach of predicted trajectories.
std::vector<std::vector<int>> predicted_neighbors(std::span<const Trajectory> predictions, int n_neigh, int dim);

/// Brake: maximal deceleration without reversing, zero turn rate. For
/// holonomic models each velocity axis is driven towards zero.
Eigen::VectorXd fallback_maneuver(ModelKind kind, const Eigen::VectorXd& state, const scenarios::Limits& limits,
                                  double dt);

struct FcOptInput {
  int agent = 0;
  Eigen::VectorXd x0;
  Eigen::VectorXd goal;
  dynamics::LinearModel model;
  Trajectory reference;
  std::vector<Trajectory> predictions;  // neighbours, aligned to the current step
};

struct FcOptOutput {
  Trajectory plan;
  int collision_rows = 0;
};

/// One agent's solve with neighbour predictions as fixed collision partners,
/// rows active only within kActivationFactor * d_safe. Throws
/// admm::LocalInfeasible.
FcOptOutput fc_opt_step(const FcOptInput& input, const scenarios::Scenario& scenario, const admm::CostWeights& cost,
                        int sqp_iters);

/// Mutable closed-loop state; exposed so single steps can be driven and
/// inspected.
struct World {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> goals;
  std::vector<Trajectory> plans;  // last plan per agent, starting at plan_start
  int plan_start = 0;
  int step = 0;
  std::optional<scenarios::TaskSource> tasks;
  std::vector<int> tasks_done;
  // [viewer][owner] -> last local copy and dual, starting at plan_start.
  std::vector<std::vector<std::optional<std::pair<Trajectory, Trajectory>>>> pair_memory;
};

World initial_world(const PlanRequest& request);

struct StepDiagnostics {
  std::vector<Eigen::VectorXd> controls;
  std::vector<bool> fallback;
  admm::Residuals residuals;
  long long messages = 0;
  std::uint64_t delay_trace_hash = 0;
  int collision_rows = 0;  // FC-Opt only
  std::vector<Trajectory> plans;  // new plan per agent, starting at the current step
  std::vector<std::vector<std::optional<std::pair<Trajectory, Trajectory>>>> pair_memory;
};

/// Per-run FC-Opt message state carried between cycles.
struct FcChannel {
  delay::DelayState ages;
  std::vector<std::vector<std::optional<std::pair<Trajectory, int>>>> inbox;  // [to][from] -> (plan, start)
};

/// Plans one cycle and returns the controls to apply; does not advance the
/// world. `fc` is required for FC-Opt.
StepDiagnostics mpc_step(const World& world, const PlanRequest& request, FcChannel* fc = nullptr);

TrialResult run_mpc(const PlanRequest& request);

/// Dispatches on the request mode.
TrialResult run_trial(const PlanRequest& request);

}  // namespace daadmm::planning
