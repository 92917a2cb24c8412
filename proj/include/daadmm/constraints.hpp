#pragma once

#include "daadmm/dynamics.hpp"
#include "daadmm/scenarios.hpp"
#include "daadmm/trajectory.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace daadmm::constraints {

class ConstraintError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDegenerateEps = 1e-6;
inline constexpr double kVerifyTol = 1e-4;

enum class RowKind { InitialState, Dynamics, Actuation, StateBound, Obstacle, Collision };

/// `copy`/`other` index into the stack layout; `k` is the timestep.
struct RowTag {
  RowKind kind;
  int copy = -1;
  int other = -1;
  int k = -1;
};

struct LinearConstraintSet {
  int n_vars = 0;
  Eigen::SparseMatrix<double, Eigen::RowMajor> A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::vector<RowTag> tags;

  int rows() const { return static_cast<int>(tags.size()); }
  int count(RowKind kind) const;
};

/// nᵀ(p_i − p_j) ≥ offset.
struct HalfSpace {
  Eigen::VectorXd normal;
  double offset = 0.0;

  double slack(const Eigen::VectorXd& p_i, const Eigen::VectorXd& p_j) const {
    return normal.dot(p_i - p_j) - offset;
  }
};

/// Supporting half-space of the keep-out ball around the reference pair.
/// Coincident references fall back to ±e_{(i+j) mod dim}, signed so that the
/// (i,j) and (j,i) rows describe the same set.
HalfSpace linearize_collision(const Eigen::VectorXd& p_ref_i, const Eigen::VectorXd& p_ref_j, double d_safe,
                              int i = 0, int j = 1);

/// Decision vector of one local problem: for each member copy, the states
/// x_0..x_K followed by the controls u_0..u_{K-1}.
struct StackLayout {
  int n_x = 0;
  int n_u = 0;
  int K = 0;
  std::vector<int> members;  // agent ids; members[0] is the owner

  int copies() const { return static_cast<int>(members.size()); }
  int copy_size() const { return n_x * (K + 1) + n_u * K; }
  int size() const { return copies() * copy_size(); }
  int state(int c, int k, int d) const { return c * copy_size() + k * n_x + d; }
  int control(int c, int k, int d) const { return c * copy_size() + n_x * (K + 1) + k * n_u + d; }
  /// Copy index of an agent, or -1.
  int copy_of(int agent) const;
};

StackLayout make_layout(ModelKind kind, int horizon, std::vector<int> members);

/// Rows for the owner's local problem. `reference`, `models` and
/// `initial_states` are indexed by copy.
LinearConstraintSet build_local_constraints(const StackLayout& layout, std::span<const Trajectory> reference,
                                            std::span<const dynamics::LinearModel> models,
                                            std::span<const Eigen::VectorXd> initial_states,
                                            const scenarios::Scenario& scenario);

/// Adds owner-vs-fixed-trajectory collision rows nᵀ(p_0(k) − q_j(k)) ≥ d_safe
/// for every k ≥ 1 where the owner's reference is within `activation_radius`
/// of prediction j. Predictions must span the horizon.
LinearConstraintSet append_fixed_collision_rows(const LinearConstraintSet& set, const StackLayout& layout,
                                                const Trajectory& owner_reference,
                                                std::span<const Trajectory> predictions, int position_dim,
                                                double d_safe, double activation_radius);

int expected_row_count(const StackLayout& layout, const scenarios::Scenario& scenario);

struct PairViolation {
  int i;
  int j;
  int k;
};

struct ObstacleHit {
  int agent;
  int obstacle;
  int k;
};

struct CollisionReport {
  bool collided = false;
  double min_distance = 0.0;
  std::optional<PairViolation> first_violation;  // earliest k, then lowest pair
  std::optional<ObstacleHit> obstacle_hit;
};

/// Pointwise check of all agent pairs and inflated obstacles (radius
/// d_safe/2) at every timestep.
CollisionReport verify_trajectories(std::span<const Trajectory> trajectories, int position_dim, double d_safe,
                                    std::span<const scenarios::Box> obstacles = {}, double tol = kVerifyTol);

}  // namespace daadmm::constraints
