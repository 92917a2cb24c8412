#pragma once

#include "daadmm/trajectory.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace daadmm::dynamics {

class DynamicsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// x_{k+1} = A_k x_k + B_k u_k + c_k. A single entry in A/B/c means the model
/// is time invariant.
struct LinearModel {
  int n_x = 0;
  int n_u = 0;
  double dt = 0.0;
  std::vector<Eigen::MatrixXd> A;
  std::vector<Eigen::MatrixXd> B;
  std::vector<Eigen::VectorXd> c;

  bool time_varying() const { return A.size() > 1; }
  /// Number of steps covered by a time-varying model; 0 for LTI models.
  int horizon() const { return time_varying() ? static_cast<int>(A.size()) : 0; }

  const Eigen::MatrixXd& A_at(int k) const { return A[time_varying() ? k : 0]; }
  const Eigen::MatrixXd& B_at(int k) const { return B[time_varying() ? k : 0]; }
  const Eigen::VectorXd& c_at(int k) const { return c[time_varying() ? k : 0]; }

  Eigen::VectorXd step(int k, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return A_at(k) * x + B_at(k) * u + c_at(k);
  }
};

/// Exact zero-order-hold double integrator in the plane, state (px,py,vx,vy).
LinearModel double_integrator_model(double dt);

/// Dubins car with state (px,py,theta,v), control (a,omega): forward-Euler
/// discretization of the unicycle with speed state.
Eigen::VectorXd dubins_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt);

/// First-order expansion of dubins_step around a reference trajectory. The
/// offsets c_k make the reference satisfy the linear model at each k.
LinearModel dubins_linearize(const Trajectory& reference, double dt, int horizon);

/// Per-axis drone: (position, velocity, lagged acceleration) on x,y,z with
/// controls (acceleration command, feed-forward acceleration) per axis.
LinearModel drone_model(double dt, double lag = 0.2);

/// Time-invariant model for a kind (Dubins has none; throws).
LinearModel lti_model(ModelKind kind, double dt);

/// Plant used for closed-loop simulation.
Eigen::VectorXd true_step(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt);

Trajectory rollout(const LinearModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls);

/// Stacked states X = free + S U for a K-step horizon, with X = [x_0..x_K]
/// and U = [u_0..u_{K-1}].
Eigen::MatrixXd condensing_matrix(const LinearModel& model, int horizon);
Eigen::VectorXd free_response(const LinearModel& model, const Eigen::VectorXd& x0, int horizon);

Eigen::MatrixXd controllability_matrix(const LinearModel& model);

double wrap_angle(double theta);

}  // namespace daadmm::dynamics
