#pragma once

#include "daadmm/constraints.hpp"
#include "daadmm/delay_network.hpp"
#include "daadmm/dynamics.hpp"
#include "daadmm/qp.hpp"
#include "daadmm/scenarios.hpp"
#include "daadmm/trajectory.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace daadmm::admm {

/// Diagonal weights of the tracking cost
///   sum_{k<K} (x_k-g)'Q(x_k-g) + u_k'R u_k  +  (x_K-g)'Qf(x_K-g).
struct CostWeights {
  Eigen::VectorXd q;
  Eigen::VectorXd r;
  Eigen::VectorXd qf;
};

CostWeights default_cost(ModelKind kind);

double trajectory_cost(const Trajectory& traj, const Eigen::VectorXd& goal, const CostWeights& cost);

/// States interpolated linearly from x0 to goal over the horizon, zero controls.
Trajectory straight_line_guess(const Eigen::VectorXd& x0, const Eigen::VectorXd& goal, int n_u, int horizon);

enum class PenaltyKind { DelayAware, LowerBound, ResidualBalancing, FixedParameter };

std::string to_string(PenaltyKind kind);

struct PenaltyStrategy {
  PenaltyKind kind = PenaltyKind::DelayAware;
  double rho_base = 0.1;
  double mu_base = 0.001;
  double tau = 2.0;
  double ratio_threshold = 10.0;
  int d_max = 0;  // LowerBound discount

  void validate() const;
};

/// rho/mu per (viewer i, owner j), row-major n x n.
struct PenaltyMatrix {
  int n = 0;
  std::vector<double> rho;
  std::vector<double> mu;

  static PenaltyMatrix uniform(int n, double rho, double mu);
  double rho_at(int i, int j) const { return rho[static_cast<std::size_t>(i) * n + j]; }
  double mu_at(int i, int j) const { return mu[static_cast<std::size_t>(i) * n + j]; }
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

/// `previous` carries the residual-balancing scale between iterations; when
/// absent the strategy's base values are used.
PenaltyMatrix penalties_for_iteration(const PenaltyStrategy& strategy, const delay::DelayState& ages,
                                      const std::optional<Residuals>& residuals,
                                      const PenaltyMatrix* previous = nullptr);

struct ConsensusProblem {
  scenarios::Scenario scenario;
  std::vector<Eigen::VectorXd> x0;
  std::vector<Eigen::VectorXd> goals;
  std::vector<std::vector<int>> neighborhoods;  // N_i with i first
  std::vector<dynamics::LinearModel> models;    // per owner, shared by every viewer
  std::vector<Trajectory> initial_guess;        // per owner
  CostWeights cost;

  int agents() const { return static_cast<int>(x0.size()); }
  void validate() const;
};

/// Rollout map of one owner, X = f + S U, plus the owner's condensed cost.
struct Condensed {
  Eigen::MatrixXd S;
  Eigen::MatrixXd St;  // S transposed, for row access
  Eigen::VectorXd f;
  Eigen::MatrixXd StS;
  Eigen::MatrixXd cost_H;  // Hessian of the tracking cost in U (QP form)
  Eigen::VectorXd cost_g;
};

std::vector<Condensed> condense_owners(const ConsensusProblem& problem);

class LocalInfeasible : public std::runtime_error {
 public:
  LocalInfeasible(int agent, qp::QpStatus status)
      : std::runtime_error("local problem of agent " + std::to_string(agent) + " " + qp::to_string(status)),
        agent_(agent),
        status_(status) {}
  int agent() const { return agent_; }
  qp::QpStatus status() const { return status_; }

 private:
  int agent_;
  qp::QpStatus status_;
};

/// Agent i's view of one iteration, indexed by copy (order of N_i).
/// Duals use the Trajectory shape: states hold y, controls hold lambda.
struct LocalInput {
  int agent = 0;
  std::span<const Trajectory> stale_consensus;
  std::span<const Trajectory> duals;
  std::span<const double> rho;
  std::span<const double> mu;
  std::span<const Trajectory> reference;  // first SQP linearization point
  // Trajectories held fixed as collision partners of the owner (FC-Opt).
  std::span<const Trajectory> fixed_predictions;
  double activation_radius = 0.0;
};

struct LocalOutput {
  std::vector<Trajectory> copies;
  int qp_iterations = 0;
};

/// Minimizes the owner's tracking cost plus the augmented consensus terms of
/// every copy subject to the local constraints, re-linearizing collision and
/// obstacle rows `sqp_iters` times. `warm` is read and updated.
LocalOutput local_update(const ConsensusProblem& problem, std::span<const Condensed> condensed,
                         const LocalInput& input, int sqp_iters, std::optional<qp::WarmStart>* warm = nullptr);

/// Penalty-weighted mean of the received copies: states by rho, controls by mu.
Trajectory weighted_mean(std::span<const Trajectory> estimates, std::span<const double> rho,
                         std::span<const double> mu);

/// received[i][c] is owner N_i[c]'s copy as delivered by viewer i.
std::vector<Trajectory> global_update_weighted(const std::vector<std::vector<int>>& neighborhoods,
                                               const std::vector<std::vector<Trajectory>>& received,
                                               const PenaltyMatrix& penalties);

/// y += rho (x - z_stale), lambda += mu (u - w_stale).
void dual_update(const std::vector<std::vector<int>>& neighborhoods, std::vector<std::vector<Trajectory>>& duals,
                 const std::vector<std::vector<Trajectory>>& locals,
                 const std::vector<std::vector<Trajectory>>& stale_consensus, const PenaltyMatrix& penalties);

Residuals compute_residuals(const std::vector<std::vector<int>>& neighborhoods,
                            const std::vector<std::vector<Trajectory>>& locals, const std::vector<Trajectory>& consensus,
                            const std::vector<Trajectory>& previous_consensus, const PenaltyMatrix& penalties);

/// Convergence threshold 1e-3 * sqrt(total stacked local dimension).
double primal_tolerance(const ConsensusProblem& problem);

enum class AdmmStatus { Converged, IterationLimit, Infeasible };

std::string to_string(AdmmStatus status);

struct AdmmOptions {
  int iterations = 30;
  int sqp_iters = 5;
  bool stop_on_infeasible = true;  // otherwise the agent keeps its last copies
  bool early_stop = true;
  bool record_iterates = false;
};

/// Starting copies and duals per viewer, in the order of N_i; entries left
/// empty (zero columns) fall back to the initial guess and zero duals.
struct AdmmWarmStart {
  std::vector<std::vector<Trajectory>> locals;
  std::vector<std::vector<Trajectory>> duals;
};

struct ConsensusResult {
  AdmmStatus status = AdmmStatus::IterationLimit;
  int failed_agent = -1;
  std::vector<bool> infeasible;  // per agent, status of its latest local solve
  int iterations = 0;
  std::vector<Trajectory> consensus;
  std::vector<std::vector<Trajectory>> locals;
  std::vector<std::vector<Trajectory>> duals;
  std::vector<Residuals> history;
  std::vector<PenaltyMatrix> penalties;
  std::vector<std::vector<Trajectory>> consensus_history;  // when recorded
  double eps_pri = 0.0;
  std::uint64_t delay_trace_hash = 0;
  long long messages = 0;
  long long qp_iterations = 0;
};

ConsensusResult run_admm(const ConsensusProblem& problem, const PenaltyStrategy& strategy,
                         const delay::DelayConfig& delays, const AdmmOptions& options, std::mt19937_64& rng,
                         const AdmmWarmStart* warm_start = nullptr);

}  // namespace daadmm::admm
