#pragma once

#include <Eigen/Core>

#include <string>

namespace daadmm {

enum class ModelKind { DoubleIntegrator, Dubins, Drone };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

int state_dim(ModelKind kind);
int control_dim(ModelKind kind);
/// Positions always occupy the leading entries of the state vector.
int position_dim(ModelKind kind);

/// States x_0..x_K as columns, controls u_0..u_{K-1} as columns.
struct Trajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd controls;

  int horizon() const { return static_cast<int>(controls.cols()); }
  Eigen::VectorXd position(int k, int dim) const { return states.col(k).head(dim); }

  static Trajectory zeros(int n_x, int n_u, int horizon) {
    return {Eigen::MatrixXd::Zero(n_x, horizon + 1), Eigen::MatrixXd::Zero(n_u, horizon)};
  }
};

}  // namespace daadmm
