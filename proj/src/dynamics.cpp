#include "daadmm/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace daadmm {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::DoubleIntegrator: return "double_integrator";
    case ModelKind::Dubins: return "dubins";
    case ModelKind::Drone: return "drone";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "double_integrator") return ModelKind::DoubleIntegrator;
  if (name == "dubins") return ModelKind::Dubins;
  if (name == "drone") return ModelKind::Drone;
  throw std::invalid_argument("unknown model '" + name + "'");
}

int state_dim(ModelKind kind) {
  switch (kind) {
    case ModelKind::DoubleIntegrator: return 4;
    case ModelKind::Dubins: return 4;
    case ModelKind::Drone: return 9;
  }
  return 0;
}

int control_dim(ModelKind kind) {
  switch (kind) {
    case ModelKind::DoubleIntegrator: return 2;
    case ModelKind::Dubins: return 2;
    case ModelKind::Drone: return 6;
  }
  return 0;
}

int position_dim(ModelKind kind) { return kind == ModelKind::Drone ? 3 : 2; }

}  // namespace daadmm

namespace daadmm::dynamics {

double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(theta + std::numbers::pi, two_pi);
  if (wrapped <= 0.0) wrapped += two_pi;
  return wrapped - std::numbers::pi;
}

LinearModel double_integrator_model(double dt) {
  if (!(dt > 0.0)) throw DynamicsError("dt must be positive");
  LinearModel m;
  m.n_x = 4;
  m.n_u = 2;
  m.dt = dt;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
  A(0, 2) = dt;
  A(1, 3) = dt;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 2);
  B(0, 0) = 0.5 * dt * dt;
  B(1, 1) = 0.5 * dt * dt;
  B(2, 0) = dt;
  B(3, 1) = dt;
  m.A = {A};
  m.B = {B};
  m.c = {Eigen::VectorXd::Zero(4)};
  return m;
}

Eigen::VectorXd dubins_step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt) {
  Eigen::VectorXd next(4);
  next[0] = x[0] + dt * x[3] * std::cos(x[2]);
  next[1] = x[1] + dt * x[3] * std::sin(x[2]);
  next[2] = x[2] + dt * u[1];
  next[3] = x[3] + dt * u[0];
  return next;
}

LinearModel dubins_linearize(const Trajectory& reference, double dt, int horizon) {
  if (!(dt > 0.0)) throw DynamicsError("dt must be positive");
  if (reference.states.rows() != 4 || reference.controls.rows() != 2) {
    throw DynamicsError("dubins reference must have 4 states and 2 controls");
  }
  if (reference.controls.cols() < horizon || reference.states.cols() < horizon + 1) {
    throw DynamicsError("dubins reference shorter than horizon " + std::to_string(horizon));
  }
  LinearModel m;
  m.n_x = 4;
  m.n_u = 2;
  m.dt = dt;
  m.A.reserve(horizon);
  m.B.reserve(horizon);
  m.c.reserve(horizon);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, 2);
  B(3, 0) = dt;
  B(2, 1) = dt;
  for (int k = 0; k < horizon; ++k) {
    const Eigen::VectorXd x = reference.states.col(k);
    const Eigen::VectorXd u = reference.controls.col(k);
    const double th = x[2];
    const double v = x[3];
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(4, 4);
    A(0, 2) = -dt * v * std::sin(th);
    A(0, 3) = dt * std::cos(th);
    A(1, 2) = dt * v * std::cos(th);
    A(1, 3) = dt * std::sin(th);
    m.c.push_back(dubins_step(x, u, dt) - A * x - B * u);
    m.A.push_back(std::move(A));
    m.B.push_back(B);
  }
  return m;
}

LinearModel drone_model(double dt, double lag) {
  if (!(dt > 0.0)) throw DynamicsError("dt must be positive");
  if (!(lag > dt)) throw DynamicsError("actuator lag must exceed dt");
  LinearModel m;
  m.n_x = 9;
  m.n_u = 6;
  m.dt = dt;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(9, 9);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(9, 6);
  for (int axis = 0; axis < 3; ++axis) {
    const int p = axis, v = 3 + axis, a = 6 + axis;
    A(p, v) = dt;
    A(v, a) = dt;
    A(a, a) = 1.0 - dt / lag;
    B(a, axis) = dt / lag;
    B(v, 3 + axis) = dt;
  }
  m.A = {A};
  m.B = {B};
  m.c = {Eigen::VectorXd::Zero(9)};
  return m;
}

LinearModel lti_model(ModelKind kind, double dt) {
  switch (kind) {
    case ModelKind::DoubleIntegrator: return double_integrator_model(dt);
    case ModelKind::Drone: return drone_model(dt);
    case ModelKind::Dubins: break;
  }
  throw DynamicsError("dubins dynamics are nonlinear; use dubins_linearize");
}

Eigen::VectorXd true_step(ModelKind kind, const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt) {
  if (kind == ModelKind::Dubins) {
    Eigen::VectorXd next = dubins_step(x, u, dt);
    next[2] = wrap_angle(next[2]);
    return next;
  }
  return lti_model(kind, dt).step(0, x, u);
}

Trajectory rollout(const LinearModel& model, const Eigen::VectorXd& x0, const Eigen::MatrixXd& controls) {
  if (x0.size() != model.n_x) throw DynamicsError("initial state has wrong dimension");
  if (controls.rows() != model.n_u) throw DynamicsError("controls have wrong dimension");
  const int steps = static_cast<int>(controls.cols());
  if (model.time_varying() && steps > model.horizon()) {
    throw DynamicsError("rollout longer than the model horizon");
  }
  Trajectory traj{Eigen::MatrixXd(model.n_x, steps + 1), controls};
  traj.states.col(0) = x0;
  for (int k = 0; k < steps; ++k) {
    traj.states.col(k + 1) = model.step(k, traj.states.col(k), controls.col(k));
  }
  return traj;
}

Eigen::MatrixXd condensing_matrix(const LinearModel& model, int horizon) {
  const int nx = model.n_x, nu = model.n_u;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nx * (horizon + 1), nu * horizon);
  for (int k = 0; k < horizon; ++k) {
    // Row block k+1 = A_k * (row block k) + B_k in column block k.
    if (k > 0) {
      S.block(nx * (k + 1), 0, nx, nu * k).noalias() = model.A_at(k) * S.block(nx * k, 0, nx, nu * k);
    }
    S.block(nx * (k + 1), nu * k, nx, nu) = model.B_at(k);
  }
  return S;
}

Eigen::VectorXd free_response(const LinearModel& model, const Eigen::VectorXd& x0, int horizon) {
  const int nx = model.n_x;
  Eigen::VectorXd f(nx * (horizon + 1));
  f.head(nx) = x0;
  for (int k = 0; k < horizon; ++k) {
    f.segment(nx * (k + 1), nx) = model.A_at(k) * f.segment(nx * k, nx) + model.c_at(k);
  }
  return f;
}

Eigen::MatrixXd controllability_matrix(const LinearModel& model) {
  const int nx = model.n_x, nu = model.n_u;
  Eigen::MatrixXd C(nx, nx * nu);
  Eigen::MatrixXd block = model.B_at(0);
  for (int i = 0; i < nx; ++i) {
    C.block(0, i * nu, nx, nu) = block;
    block = model.A_at(0) * block;
  }
  return C;
}

}  // namespace daadmm::dynamics
