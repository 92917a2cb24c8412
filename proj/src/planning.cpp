#include "daadmm/planning.hpp"

#include "daadmm/constraints.hpp"
#include "daadmm/dynamics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

namespace daadmm::planning {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

// Per-cycle generator; every method sees the same stream for a (seed, step).
std::mt19937_64 cycle_rng(std::uint64_t seed, int step) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step)};
  return std::mt19937_64(seq);
}

double position_error(const Eigen::VectorXd& x, const Eigen::VectorXd& goal, int dim) {
  return (x.head(dim) - goal.head(dim)).norm();
}

// Goal with the heading moved to the equivalent angle nearest the state's.
Eigen::VectorXd cost_goal(ModelKind kind, const Eigen::VectorXd& state, const Eigen::VectorXd& goal) {
  Eigen::VectorXd g = goal;
  if (kind == ModelKind::Dubins) g[2] = state[2] + dynamics::wrap_angle(goal[2] - state[2]);
  return g;
}

Eigen::VectorXd clamp_control(const Eigen::VectorXd& u, const scenarios::Limits& limits) {
  return u.cwiseMax(limits.u_min).cwiseMin(limits.u_max);
}

// Controls shifted `by` steps and padded with zeros, rolled out from x0.
Trajectory shifted_rollout(ModelKind kind, const Trajectory& plan, int by, const Eigen::VectorXd& x0, double dt) {
  const int K = plan.horizon();
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(plan.controls.rows(), K);
  const int keep = std::max(0, K - by);
  if (keep > 0) u.leftCols(keep) = plan.controls.rightCols(keep);
  if (kind == ModelKind::Dubins) {
    Trajectory t{Eigen::MatrixXd(x0.size(), K + 1), u};
    t.states.col(0) = x0;
    for (int k = 0; k < K; ++k) t.states.col(k + 1) = dynamics::dubins_step(t.states.col(k), u.col(k), dt);
    return t;
  }
  return dynamics::rollout(dynamics::lti_model(kind, dt), x0, u);
}

// A plan made at `start`, re-indexed to begin at `now`, holding its last state.
Trajectory align_prediction(const Trajectory& plan, int start, int now) {
  const int K = plan.horizon();
  const int by = std::max(0, now - start);
  Trajectory t = plan;
  for (int k = 0; k <= K; ++k) t.states.col(k) = plan.states.col(std::min(K, k + by));
  t.controls.setZero();
  for (int k = 0; k + by < K; ++k) t.controls.col(k) = plan.controls.col(k + by);
  return t;
}

// Fills heading, speed and controls of a planar path so a Dubins expansion
// about it has authority in every direction.
Trajectory dubins_path_reference(const Trajectory& path, double dt) {
  Trajectory t = path;
  const int K = path.horizon();
  double heading = path.states(2, 0);
  for (int k = 0; k <= K; ++k) {
    const int a = std::min(k, K - 1);
    const Eigen::Vector2d d = path.states.col(a + 1).head<2>() - path.states.col(a).head<2>();
    if (d.norm() > 1e-9) heading += dynamics::wrap_angle(std::atan2(d.y(), d.x()) - heading);
    t.states(2, k) = heading;
    t.states(3, k) = d.norm() / dt;
  }
  for (int k = 0; k < K; ++k) {
    t.controls(0, k) = (t.states(3, k + 1) - t.states(3, k)) / dt;
    t.controls(1, k) = (t.states(2, k + 1) - t.states(2, k)) / dt;
  }
  return t;
}

// Unicycle pursuit of the goal rolled out on the true model; a feasible
// expansion point for a car that has to turn before it can close the gap.
Trajectory pursuit_reference(const Eigen::VectorXd& x0, const Eigen::VectorXd& goal, const scenarios::Limits& lim,
                             int K, double dt) {
  Trajectory t = Trajectory::zeros(4, 2, K);
  t.states.col(0) = x0;
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd& x = t.states.col(k);
    const Eigen::Vector2d d = goal.head<2>() - x.head<2>();
    const double err = dynamics::wrap_angle(std::atan2(d.y(), d.x()) - x[2]);
    const double v_cmd = std::max(0.0, std::min(lim.u_max[0], d.norm()) * std::cos(err));
    Eigen::Vector2d u((v_cmd - x[3]) / dt, 2.0 * err);
    u = u.cwiseMax(lim.u_min).cwiseMin(lim.u_max);
    t.controls.col(k) = u;
    t.states.col(k + 1) = dynamics::true_step(ModelKind::Dubins, x, u, dt);
  }
  return t;
}

// Multipliers re-indexed the same way, padded with zeros.
Trajectory shift_dual(const Trajectory& dual, int by) {
  const int K = dual.horizon();
  Trajectory t = Trajectory::zeros(static_cast<int>(dual.states.rows()), static_cast<int>(dual.controls.rows()), K);
  for (int k = 0; k + by <= K; ++k) t.states.col(k) = dual.states.col(k + by);
  for (int k = 0; k + by < K; ++k) t.controls.col(k) = dual.controls.col(k + by);
  return t;
}

dynamics::LinearModel model_for(ModelKind kind, const Trajectory& reference, double dt, int K) {
  if (kind == ModelKind::Dubins) return dynamics::dubins_linearize(reference, dt, K);
  return dynamics::lti_model(kind, dt);
}

scenarios::Scenario planning_scenario(const PlanRequest& r) {
  scenarios::Scenario s = r.scenario;
  s.d_safe += r.collision_margin;
  return s;
}

double stage_cost(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& goal,
                  const admm::CostWeights& w) {
  const Eigen::VectorXd e = x - goal;
  return e.dot(w.q.cwiseProduct(e)) + u.dot(w.r.cwiseProduct(u));
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::DA: return "da";
    case Method::LB: return "lb";
    case Method::RB: return "rb";
    case Method::FP: return "fp";
    case Method::FCOpt: return "fc";
  }
  return "unknown";
}

std::string to_string(Mode m) { return m == Mode::TrajOpt ? "trajopt" : "mpc"; }

std::string to_string(FailureReason r) {
  switch (r) {
    case FailureReason::None: return "";
    case FailureReason::Collision: return "Collision";
    case FailureReason::Infeasible: return "Infeasible";
    case FailureReason::Timeout: return "Timeout";
    case FailureReason::GoalNotReached: return "GoalNotReached";
    case FailureReason::Crash: return "Crash";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::DA, Method::LB, Method::RB, Method::FP, Method::FCOpt}) {
    if (to_string(m) == name) return m;
  }
  throw PlanningError("unknown method '" + name + "' (expected da, lb, rb, fp or fc)");
}

Mode mode_from_string(const std::string& name) {
  if (name == "trajopt") return Mode::TrajOpt;
  if (name == "mpc") return Mode::MPC;
  throw PlanningError("unknown mode '" + name + "' (expected trajopt or mpc)");
}

admm::CostWeights trajopt_cost(ModelKind kind) {
  admm::CostWeights w = admm::default_cost(kind);
  w.qf = 100.0 * w.q;
  // Light running cost: the consensus penalties, not the stage cost, shape the path.
  w.q *= 0.003;
  w.r *= 0.003;
  return w;
}

admm::CostWeights mpc_cost(ModelKind kind) {
  admm::CostWeights w = admm::default_cost(kind);
  w.q *= 0.01;
  w.r *= 0.01;
  // Arrival is judged on position; a goal heading only makes a car park.
  if (kind == ModelKind::Dubins) w.q[2] = 0.0;
  w.qf = 100.0 * w.q;
  return w;
}

void PlanRequest::validate() const {
  scenarios::validate(scenario);
  if (iterations < 1 || sqp_iters < 1) throw PlanningError("iteration budgets must be at least 1");
  if (method == Method::FCOpt && mode != Mode::MPC) throw PlanningError("fc-opt runs in mpc mode only");
  if (n_neigh >= scenario.n_agents) throw PlanningError("n_neigh must be smaller than the number of agents");
  if (!(rho_x > 0.0) || !(rho_u > 0.0)) throw PlanningError("penalties must be positive");
  if (!(collision_margin >= 0.0)) throw PlanningError("collision margin must be non-negative");
  if (tasks_per_agent < 1) throw PlanningError("tasks_per_agent must be at least 1");
  if (time_limit && !(*time_limit > 0.0)) throw PlanningError("time limit must be positive");
  delay.validate(scenario.horizon);
}

admm::CostWeights PlanRequest::resolved_cost() const {
  if (cost) return *cost;
  return mode == Mode::TrajOpt ? trajopt_cost(scenario.model) : mpc_cost(scenario.model);
}

double PlanRequest::resolved_time_limit() const {
  if (time_limit) return *time_limit;
  return scenario.model == ModelKind::Drone ? 19.9 : 40.0;
}

int PlanRequest::resolved_neighbors() const {
  const int others = scenario.n_agents - 1;
  return n_neigh < 0 ? others : std::min(n_neigh, others);
}

Trajectory keep_right_guess(const Eigen::VectorXd& x0, const Eigen::VectorXd& goal, int n_u, int K, double offset,
                            int dim) {
  Trajectory t = admm::straight_line_guess(x0, goal, n_u, K);
  if (offset == 0.0 || dim < 2) return t;
  const Eigen::Vector2d d = (goal - x0).head<2>();
  if (d.norm() < 1e-9) return t;
  const Eigen::Vector2d right = Eigen::Vector2d(d.y(), -d.x()).normalized();
  for (int k = 1; k < K; ++k) {
    t.states.col(k).head<2>() += offset * std::sin(std::numbers::pi * k / K) * right;
  }
  return t;
}

admm::PenaltyStrategy strategy_for(const PlanRequest& r) {
  admm::PenaltyStrategy s;
  switch (r.method) {
    case Method::DA: s.kind = admm::PenaltyKind::DelayAware; break;
    case Method::LB: s.kind = admm::PenaltyKind::LowerBound; break;
    case Method::RB: s.kind = admm::PenaltyKind::ResidualBalancing; break;
    case Method::FP: s.kind = admm::PenaltyKind::FixedParameter; break;
    case Method::FCOpt: throw PlanningError("fc-opt has no penalty strategy");
  }
  s.rho_base = r.rho_x;
  s.mu_base = r.rho_u;
  // Without delays the lower bound has nothing to discount.
  s.d_max = r.delay.p_delay > 0.0 ? r.delay.d_max : 0;
  return s;
}

admm::ConsensusProblem make_trajopt_problem(const PlanRequest& r) {
  const auto& sc = r.scenario;
  const int n = sc.n_agents, K = sc.horizon, nu = control_dim(sc.model);
  admm::ConsensusProblem p;
  p.scenario = planning_scenario(r);
  p.x0 = sc.starts;
  p.goals = sc.goals;
  p.cost = r.resolved_cost();
  std::vector<Eigen::VectorXd> positions;
  for (const auto& x : sc.starts) positions.push_back(x.head(sc.position_dim()));
  p.neighborhoods = nearest_neighbors(positions, r.resolved_neighbors());
  for (int i = 0; i < n; ++i) {
    p.initial_guess.push_back(keep_right_guess(sc.starts[i], sc.goals[i], nu, K, r.guess_offset, sc.position_dim()));
    const Trajectory still = shifted_rollout(sc.model, Trajectory::zeros(state_dim(sc.model), nu, K), 0,
                                             sc.starts[i], sc.dt);
    p.models.push_back(model_for(sc.model, still, sc.dt, K));
  }
  return p;
}

TrialResult solve_trajopt(const PlanRequest& r) {
  r.validate();
  if (r.mode != Mode::TrajOpt) throw PlanningError("solve_trajopt needs trajopt mode");
  const auto& sc = r.scenario;
  const int dim = sc.position_dim();
  const auto problem = make_trajopt_problem(r);
  admm::AdmmOptions opt;
  opt.iterations = r.iterations;
  opt.sqp_iters = r.sqp_iters;
  std::mt19937_64 rng(r.seed);

  const auto start = Clock::now();
  const auto res = admm::run_admm(problem, strategy_for(r), r.delay, opt, rng);
  TrialResult out;
  out.comp_time = seconds_since(start);
  out.seed = r.seed;
  out.delay_trace_hash = res.delay_trace_hash;
  out.messages = res.messages;
  out.steps = res.iterations;
  if (!res.history.empty()) {
    out.final_primal = res.history.back().primal;
    out.final_dual = res.history.back().dual;
  }
  if (res.status == admm::AdmmStatus::Infeasible) {
    out.failure_reason = FailureReason::Infeasible;
    return out;
  }

  const auto report = constraints::verify_trajectories(res.consensus, dim, sc.d_safe, sc.obstacles);
  out.min_distance = report.min_distance;
  const auto cost = r.resolved_cost();
  int settled = 0;
  for (int i = 0; i < sc.n_agents; ++i) {
    const auto& z = res.consensus[i];
    out.total_cost += admm::trajectory_cost(z, sc.goals[i], cost);
    out.max_goal_error = std::max(out.max_goal_error, position_error(z.states.col(sc.horizon), sc.goals[i], dim));
    int k = sc.horizon;
    while (k > 0 && position_error(z.states.col(k - 1), sc.goals[i], dim) <= kGoalTolerance) --k;
    settled = std::max(settled, k);
  }
  if (report.collided) {
    out.failure_reason = FailureReason::Collision;
  } else if (out.max_goal_error > kGoalTolerance) {
    out.failure_reason = FailureReason::GoalNotReached;
  } else {
    out.success = true;
    out.makespan = settled * sc.dt;
  }
  return out;
}

std::vector<std::vector<int>> nearest_neighbors(std::span<const Eigen::VectorXd> positions, int n_neigh) {
  const int n = static_cast<int>(positions.size());
  if (n_neigh < 0 || n_neigh >= std::max(n, 1)) throw PlanningError("n_neigh must lie in [0, N)");
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> others;
    for (int j = 0; j < n; ++j) {
      if (j != i) others.emplace_back((positions[i] - positions[j]).squaredNorm(), j);
    }
    std::sort(others.begin(), others.end());
    out[i].push_back(i);
    for (int k = 0; k < n_neigh; ++k) out[i].push_back(others[k].second);
  }
  return out;
}

std::vector<std::vector<int>> predicted_neighbors(std::span<const Trajectory> predictions, int n_neigh, int dim) {
  const int n = static_cast<int>(predictions.size());
  if (n_neigh < 0 || n_neigh >= std::max(n, 1)) throw PlanningError("n_neigh must lie in [0, N)");
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> others;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int K = static_cast<int>(std::min(predictions[i].states.cols(), predictions[j].states.cols()));
      double closest = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        closest = std::min(closest,
                           (predictions[i].states.col(k).head(dim) - predictions[j].states.col(k).head(dim)).squaredNorm());
      }
      others.emplace_back(closest, j);
    }
    std::sort(others.begin(), others.end());
    out[i].push_back(i);
    for (int k = 0; k < n_neigh; ++k) out[i].push_back(others[k].second);
  }
  return out;
}

Eigen::VectorXd fallback_maneuver(ModelKind kind, const Eigen::VectorXd& x, const scenarios::Limits& limits,
                                  double dt) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(limits.u_min.size());
  switch (kind) {
    case ModelKind::Dubins: {
      const double v = x[3];
      const double a_max = -limits.u_min[0];
      u[0] = v > 0.0 ? -std::min(a_max, v / dt) : 0.0;
      break;
    }
    case ModelKind::DoubleIntegrator:
      for (int d = 0; d < 2; ++d) u[d] = -x[2 + d] / dt;
      break;
    case ModelKind::Drone:
      // Feed-forward cancels velocity and the lagged acceleration.
      for (int d = 0; d < 3; ++d) u[3 + d] = -x[3 + d] / dt - x[6 + d];
      break;
  }
  return clamp_control(u, limits);
}

FcOptOutput fc_opt_step(const FcOptInput& in, const scenarios::Scenario& scenario, const admm::CostWeights& cost,
                        int sqp_iters) {
  admm::ConsensusProblem p;
  p.scenario = scenario;
  p.scenario.n_agents = 1;
  p.x0 = {in.x0};
  p.goals = {in.goal};
  p.neighborhoods = {{0}};
  p.models = {in.model};
  p.initial_guess = {in.reference};
  p.cost = cost;
  p.validate();
  const auto condensed = admm::condense_owners(p);

  const Trajectory duals = Trajectory::zeros(static_cast<int>(in.x0.size()), in.model.n_u, scenario.horizon);
  const double zero = 0.0;
  const double radius = kActivationFactor * scenario.d_safe;
  admm::LocalInput li{0,
                      std::span<const Trajectory>(&in.reference, 1),
                      std::span<const Trajectory>(&duals, 1),
                      std::span<const double>(&zero, 1),
                      std::span<const double>(&zero, 1),
                      std::span<const Trajectory>(&in.reference, 1),
                      in.predictions,
                      radius};
  FcOptOutput out;
  const int dim = scenario.position_dim();
  for (const auto& pred : in.predictions) {
    for (int k = 1; k <= scenario.horizon; ++k) {
      if ((in.reference.states.col(k).head(dim) - pred.states.col(k).head(dim)).norm() < radius) ++out.collision_rows;
    }
  }
  try {
    out.plan = admm::local_update(p, condensed, li, sqp_iters).copies[0];
  } catch (const admm::LocalInfeasible& e) {
    throw admm::LocalInfeasible(in.agent, e.status());
  }
  return out;
}

World initial_world(const PlanRequest& r) {
  const auto& sc = r.scenario;
  World w;
  w.states = sc.starts;
  w.goals = sc.goals;
  w.tasks = sc.tasks;
  w.tasks_done.assign(sc.n_agents, 0);
  w.pair_memory.assign(sc.n_agents, std::vector<std::optional<std::pair<Trajectory, Trajectory>>>(sc.n_agents));
  for (int i = 0; i < sc.n_agents; ++i) {
    w.plans.push_back(keep_right_guess(sc.starts[i], sc.goals[i], control_dim(sc.model), sc.horizon, r.guess_offset,
                                       sc.position_dim()));
  }
  return w;
}

namespace {

FcChannel make_channel(const World& w) {
  const int n = static_cast<int>(w.states.size());
  FcChannel ch;
  ch.ages = delay::DelayState::fresh(n);
  ch.inbox.assign(n, std::vector<std::optional<std::pair<Trajectory, int>>>(n));
  return ch;
}

// Repeated fallback from x, as broadcast by an agent that is braking.
Trajectory brake_rollout(const scenarios::Scenario& sc, const Eigen::VectorXd& x) {
  const int nu = static_cast<int>(sc.limits.u_max.size());
  Trajectory t = Trajectory::zeros(static_cast<int>(x.size()), nu, sc.horizon);
  t.states.col(0) = x;
  for (int k = 0; k < sc.horizon; ++k) {
    t.controls.col(k) = fallback_maneuver(sc.model, t.states.col(k), sc.limits, sc.dt);
    t.states.col(k + 1) = dynamics::true_step(sc.model, t.states.col(k), t.controls.col(k), sc.dt);
  }
  return t;
}

StepDiagnostics fc_step(const World& w, const PlanRequest& r, FcChannel& ch, std::mt19937_64& rng,
                        const std::vector<Trajectory>& refs, const std::vector<Eigen::VectorXd>& goals,
                        const std::vector<dynamics::LinearModel>& models) {
  const auto& sc = r.scenario;
  const int n = sc.n_agents;
  const auto ps = planning_scenario(r);
  const auto cost = r.resolved_cost();
  StepDiagnostics diag;
  if (w.step > 0) ch.ages = delay::sample_delays(ch.ages, r.delay, rng);
  diag.delay_trace_hash = 1469598103934665603ull;
  for (int a : ch.ages.age_lg) diag.delay_trace_hash = fnv1a(diag.delay_trace_hash, static_cast<std::uint64_t>(a));
  // Each agent broadcasts its latest plan once per cycle.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (w.step == 0) {
        // Nothing exchanged yet: neighbours are assumed to hold position.
        ch.inbox[i][j] = std::make_pair(brake_rollout(sc, w.states[j]), 0);
      } else if (ch.ages.age(delay::Round::LocalToGlobal, i, j) == 0) {
        ch.inbox[i][j] = std::make_pair(w.plans[j], w.plan_start);
      }
    }
  }
  diag.messages = n;
  for (int i = 0; i < n; ++i) {
    FcOptInput in{i, w.states[i], goals[i], models[i], refs[i], {}};
    for (int j = 0; j < n; ++j) {
      if (j != i) in.predictions.push_back(align_prediction(ch.inbox[i][j]->first, ch.inbox[i][j]->second, w.step));
    }
    try {
      auto out = fc_opt_step(in, ps, cost, r.sqp_iters);
      diag.collision_rows += out.collision_rows;
      diag.controls.push_back(clamp_control(out.plan.controls.col(0), sc.limits));
      diag.fallback.push_back(false);
      diag.plans.push_back(std::move(out.plan));
    } catch (const admm::LocalInfeasible&) {
      diag.controls.push_back(fallback_maneuver(sc.model, w.states[i], sc.limits, sc.dt));
      diag.fallback.push_back(true);
      diag.plans.push_back(brake_rollout(sc, w.states[i]));
    }
  }
  return diag;
}

}  // namespace

StepDiagnostics mpc_step(const World& w, const PlanRequest& r, FcChannel* fc) {
  const auto& sc = r.scenario;
  const int n = sc.n_agents, K = sc.horizon, dim = sc.position_dim();
  std::mt19937_64 rng = cycle_rng(r.seed, w.step);

  std::vector<Trajectory> refs;
  std::vector<Eigen::VectorXd> goals;
  std::vector<dynamics::LinearModel> models;
  for (int i = 0; i < n; ++i) {
    if (w.step == 0) {
      // No executed plan yet: expand about the initial path itself.
      refs.push_back(sc.model == ModelKind::Dubins ? dubins_path_reference(w.plans[i], sc.dt) : w.plans[i]);
    } else {
      refs.push_back(shifted_rollout(sc.model, w.plans[i], w.step - w.plan_start, w.states[i], sc.dt));
      // A parked car linearizes without lateral authority; short of its goal
      // it re-expands about a pursuit manoeuvre instead.
      if (sc.model == ModelKind::Dubins && refs.back().states.row(3).cwiseAbs().maxCoeff() < kParkedSpeed &&
          position_error(w.states[i], w.goals[i], dim) > kGoalTolerance) {
        refs.back() = pursuit_reference(w.states[i], w.goals[i], sc.limits, K, sc.dt);
      }
    }
    goals.push_back(cost_goal(sc.model, w.states[i], w.goals[i]));
    models.push_back(model_for(sc.model, refs.back(), sc.dt, K));
  }

  if (r.method == Method::FCOpt) {
    if (!fc) throw PlanningError("fc-opt needs a message channel");
    return fc_step(w, r, *fc, rng, refs, goals, models);
  }

  admm::ConsensusProblem p;
  p.scenario = planning_scenario(r);
  p.x0 = w.states;
  p.goals = goals;
  p.models = models;
  p.cost = r.resolved_cost();
  p.neighborhoods = predicted_neighbors(refs, r.resolved_neighbors(), dim);
  p.initial_guess = refs;

  admm::AdmmOptions opt;
  opt.iterations = r.iterations;
  opt.sqp_iters = r.sqp_iters;
  opt.stop_on_infeasible = false;
  admm::AdmmWarmStart warm;
  warm.locals.resize(n);
  warm.duals.resize(n);
  const int by = w.step - w.plan_start;
  for (int i = 0; i < n; ++i) {
    for (int j : p.neighborhoods[i]) {
      const auto& m = w.step > 0 && !w.pair_memory.empty() ? w.pair_memory[i][j] : std::nullopt;
      warm.locals[i].push_back(m ? align_prediction(m->first, 0, by) : Trajectory{});
      warm.duals[i].push_back(m && r.warm_start_duals ? shift_dual(m->second, by) : Trajectory{});
    }
  }
  const auto res = admm::run_admm(p, strategy_for(r), r.delay, opt, rng, &warm);

  StepDiagnostics diag;
  diag.pair_memory.assign(n, std::vector<std::optional<std::pair<Trajectory, Trajectory>>>(n));
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < p.neighborhoods[i].size(); ++c) {
      diag.pair_memory[i][p.neighborhoods[i][c]] = std::make_pair(res.locals[i][c], res.duals[i][c]);
    }
  }
  diag.messages = res.messages;
  diag.delay_trace_hash = res.delay_trace_hash;
  if (!res.history.empty()) diag.residuals = res.history.back();
  for (int i = 0; i < n; ++i) {
    if (res.infeasible[i]) {
      diag.controls.push_back(fallback_maneuver(sc.model, w.states[i], sc.limits, sc.dt));
      diag.fallback.push_back(true);
    } else {
      diag.controls.push_back(clamp_control(res.consensus[i].controls.col(0), sc.limits));
      diag.fallback.push_back(false);
    }
    diag.plans.push_back(res.consensus[i]);
  }
  return diag;
}

TrialResult run_mpc(const PlanRequest& r) {
  r.validate();
  if (r.mode != Mode::MPC) throw PlanningError("run_mpc needs mpc mode");
  const auto& sc = r.scenario;
  const int n = sc.n_agents, dim = sc.position_dim();
  const auto cost = r.resolved_cost();
  const int max_steps = static_cast<int>(std::floor(r.resolved_time_limit() / sc.dt + 1e-9));
  const int window = static_cast<int>(std::lround(kDeadlockWindow / sc.dt));

  World w = initial_world(r);
  FcChannel channel = make_channel(w);
  TrialResult out;
  out.seed = r.seed;
  out.delay_trace_hash = 1469598103934665603ull;
  out.min_distance = std::numeric_limits<double>::infinity();

  auto finished = [&](int i) {
    return w.tasks_done[i] + 1 >= r.tasks_per_agent && position_error(w.states[i], w.goals[i], dim) <= kGoalTolerance;
  };
  std::vector<std::vector<Eigen::VectorXd>> state_history;  // since the last goal change
  double solve_time = 0.0;

  for (;;) {
    bool all = true;
    for (int i = 0; i < n && all; ++i) all = finished(i);
    if (all) {
      out.success = true;
      out.makespan = w.step * sc.dt;
      break;
    }
    if (w.step >= max_steps) {
      out.failure_reason = FailureReason::Timeout;
      break;
    }
    state_history.push_back(w.states);
    if (static_cast<int>(state_history.size()) > window) {
      // Deadlock: no unfinished agent has moved or turned over the window.
      const auto& old = state_history[state_history.size() - 1 - window];
      bool stuck = true;
      for (int i = 0; i < n && stuck; ++i) {
        if (!finished(i)) stuck = (w.states[i] - old[i]).norm() < kDeadlockMotion;
      }
      if (stuck) {
        out.failure_reason = FailureReason::Timeout;
        break;
      }
    }

    const auto t0 = Clock::now();
    const StepDiagnostics diag = mpc_step(w, r, &channel);
    solve_time += seconds_since(t0);
    out.messages += diag.messages;
    out.delay_trace_hash = fnv1a(out.delay_trace_hash, diag.delay_trace_hash);
    out.final_primal = diag.residuals.primal;
    out.final_dual = diag.residuals.dual;

    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd& u = diag.controls[i];
      out.total_cost += stage_cost(w.states[i], u, cost_goal(sc.model, w.states[i], w.goals[i]), cost);
      w.states[i] = dynamics::true_step(sc.model, w.states[i], u, sc.dt);
      if (diag.fallback[i]) {
        ++out.fallback_steps;
      } else {
        out.max_shift_error =
            std::max(out.max_shift_error, (diag.plans[i].states.col(1).head(dim) - w.states[i].head(dim)).norm());
      }
    }
    w.plans = diag.plans;
    w.pair_memory = diag.pair_memory;
    w.plan_start = w.step;
    ++w.step;
    out.steps = w.step;

    std::vector<Trajectory> snapshot;
    for (const auto& x : w.states) snapshot.push_back(Trajectory{x, Eigen::MatrixXd()});
    const auto report = constraints::verify_trajectories(snapshot, dim, sc.d_safe, sc.obstacles);
    out.min_distance = std::min(out.min_distance, report.min_distance);
    if (report.collided) {
      out.failure_reason = FailureReason::Collision;
      break;
    }

    bool goal_changed = false;
    for (int i = 0; i < n; ++i) {
      if (w.tasks && w.tasks_done[i] + 1 < r.tasks_per_agent &&
          position_error(w.states[i], w.goals[i], dim) <= kGoalTolerance) {
        ++w.tasks_done[i];
        w.goals[i] = scenarios::next_task(*w.tasks, i);
        goal_changed = true;
      }
    }
    if (goal_changed) state_history.clear();
  }
  for (int i = 0; i < n; ++i) {
    out.max_goal_error = std::max(out.max_goal_error, position_error(w.states[i], w.goals[i], dim));
  }
  if (!std::isfinite(out.min_distance)) out.min_distance = 0.0;
  out.comp_time = solve_time;
  return out;
}

TrialResult run_trial(const PlanRequest& r) {
  return r.mode == Mode::TrajOpt ? solve_trajopt(r) : run_mpc(r);
}

}  // namespace daadmm::planning
