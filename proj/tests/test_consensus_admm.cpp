#include <doctest.h>

#include "daadmm/consensus_admm.hpp"
#include "daadmm/dynamics.hpp"
#include "daadmm/scenarios.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace daadmm;
using namespace daadmm::admm;

namespace {

scenarios::Scenario bare_scenario(int n, int K) {
  scenarios::Scenario s;
  s.name = "test";
  s.model = ModelKind::DoubleIntegrator;
  s.n_agents = n;
  s.horizon = K;
  s.dt = 0.075;
  s.d_safe = 0.3;
  s.limits = scenarios::default_limits(s.model);
  return s;
}

ConsensusProblem lone_agent(int K, const Eigen::Vector4d& x0, const Eigen::Vector4d& goal) {
  ConsensusProblem p;
  p.scenario = bare_scenario(1, K);
  p.scenario.starts = {x0};
  p.scenario.goals = {goal};
  p.x0 = {x0};
  p.goals = {goal};
  p.neighborhoods = {{0}};
  p.models = {dynamics::double_integrator_model(0.075)};
  p.initial_guess = {straight_line_guess(x0, goal, 2, K)};
  p.cost = default_cost(ModelKind::DoubleIntegrator);
  return p;
}

Trajectory random_traj(std::mt19937_64& rng, int nx, int nu, int K, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Trajectory t = Trajectory::zeros(nx, nu, K);
  for (Eigen::Index i = 0; i < t.states.size(); ++i) t.states.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < t.controls.size(); ++i) t.controls.data()[i] = g(rng);
  return t;
}

// Uncondensed equality-constrained oracle for one copy:
//   min cost(X,U) + y'X + rho/2|X - z|^2 + l'U + mu/2|U - w|^2  s.t. dynamics.
Trajectory kkt_oracle(const ConsensusProblem& p, const Trajectory& z, const Trajectory& y, double rho, double mu) {
  const auto& m = p.models[0];
  const int K = p.scenario.horizon, nx = m.n_x, nu = m.n_u;
  const int nX = nx * (K + 1), n = nX + nu * K;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int k = 0; k <= K; ++k) {
    const Eigen::VectorXd& q = k < K ? p.cost.q : p.cost.qf;
    for (int d = 0; d < nx; ++d) {
      const int v = k * nx + d;
      H(v, v) = 2.0 * q[d] + rho;
      g[v] = -2.0 * q[d] * p.goals[0][d] + y.states(d, k) - rho * z.states(d, k);
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int d = 0; d < nu; ++d) {
      const int v = nX + k * nu + d;
      H(v, v) = 2.0 * p.cost.r[d] + mu;
      g[v] = y.controls(d, k) - mu * z.controls(d, k);
    }
  }
  const int ne = nx * (K + 1);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(ne, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(ne);
  E.block(0, 0, nx, nx).setIdentity();
  e.head(nx) = p.x0[0];
  for (int k = 0; k < K; ++k) {
    const int r = nx * (k + 1);
    E.block(r, (k + 1) * nx, nx, nx).setIdentity();
    E.block(r, k * nx, nx, nx) = -m.A_at(k);
    E.block(r, nX + k * nu, nx, nu) = -m.B_at(k);
    e.segment(r, nx) = m.c_at(k);
  }
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + ne, n + ne);
  kkt.topLeftCorner(n, n) = H;
  kkt.topRightCorner(n, ne) = E.transpose();
  kkt.bottomLeftCorner(ne, n) = E;
  Eigen::VectorXd rhs(n + ne);
  rhs << -g, e;
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  Trajectory out = Trajectory::zeros(nx, nu, K);
  out.states = Eigen::Map<const Eigen::MatrixXd>(sol.data(), nx, K + 1);
  out.controls = Eigen::Map<const Eigen::MatrixXd>(sol.data() + nX, nu, K);
  return out;
}

LocalOutput solve_lone(const ConsensusProblem& p, const Trajectory& z, const Trajectory& y, double rho, double mu) {
  const auto condensed = condense_owners(p);
  LocalInput in{0,
                std::span<const Trajectory>(&z, 1),
                std::span<const Trajectory>(&y, 1),
                std::span<const double>(&rho, 1),
                std::span<const double>(&mu, 1),
                std::span<const Trajectory>(&p.initial_guess[0], 1),
                {},
                0.0};
  return local_update(p, condensed, in, 1);
}

ConsensusProblem small_circle(int n, int K = 20) {
  auto s = scenarios::circle_formation(n, 1.0, ModelKind::DoubleIntegrator, 0.3, K);
  ConsensusProblem p;
  p.scenario = s;
  p.x0 = s.starts;
  p.goals = s.goals;
  p.cost = default_cost(s.model);
  p.cost.q *= 0.1;
  p.cost.r *= 0.1;
  p.cost.qf = 1000.0 * p.cost.q;
  for (int i = 0; i < n; ++i) {
    std::vector<int> N{i};
    for (int j = 0; j < n; ++j) {
      if (j != i) N.push_back(j);
    }
    p.neighborhoods.push_back(N);
    p.models.push_back(dynamics::double_integrator_model(s.dt));
    Trajectory guess = straight_line_guess(s.starts[i], s.goals[i], 2, K);
    const Eigen::Vector2d d = (s.goals[i] - s.starts[i]).head<2>().normalized();
    for (int k = 1; k < K; ++k) guess.states.col(k).head<2>() += 0.4 * std::sin(M_PI * k / K) * Eigen::Vector2d(d.y(), -d.x());
    p.initial_guess.push_back(guess);
  }
  return p;
}

}  // namespace

TEST_CASE("local update of a lone agent matches the KKT solution") {
  std::mt19937_64 rng(11);
  const Eigen::Vector4d x0(0.1, -0.2, 0.05, 0.0);
  const Eigen::Vector4d goal(0.3, 0.1, 0.0, 0.0);
  const int K = 10;
  const auto p = lone_agent(K, x0, goal);
  for (int trial = 0; trial < 5; ++trial) {
    Trajectory z = random_traj(rng, 4, 2, K, 0.1);
    Trajectory y = random_traj(rng, 4, 2, K, 0.01);
    const double rho = 0.1 * (trial + 1), mu = 0.001 * (trial + 1);
    const Trajectory oracle = kkt_oracle(p, z, y, rho, mu);
    REQUIRE(oracle.controls.cwiseAbs().maxCoeff() < 2.0);  // bounds inactive
    const auto out = solve_lone(p, z, y, rho, mu);
    REQUIRE(out.copies.size() == 1);
    CHECK((out.copies[0].states - oracle.states).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((out.copies[0].controls - oracle.controls).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("large penalties pin the local copy to a feasible consensus") {
  const Eigen::Vector4d x0(0, 0, 0.2, 0);
  const auto p = lone_agent(12, x0, Eigen::Vector4d(1, 1, 0, 0));
  Eigen::MatrixXd u(2, 12);
  for (int k = 0; k < 12; ++k) u.col(k) << 0.5 * std::sin(0.3 * k), -0.4;
  const Trajectory z = dynamics::rollout(p.models[0], x0, u);
  const Trajectory y = Trajectory::zeros(4, 2, 12);
  const auto out = solve_lone(p, z, y, 1e6, 1e6);
  CHECK((out.copies[0].states - z.states).cwiseAbs().maxCoeff() < 1e-4);
  CHECK((out.copies[0].controls - z.controls).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("penalty strategies") {
  auto ages = delay::DelayState::fresh(3);
  // Copy held by viewer 2 of owner 0 arrived one round late.
  ages.age_lg[0 * 3 + 2] = 1;
  REQUIRE(ages.age(delay::Round::LocalToGlobal, 0, 2) == 1);

  PenaltyStrategy da;
  const auto m = penalties_for_iteration(da, ages, std::nullopt);
  CHECK(m.rho_at(2, 0) == doctest::Approx(0.05));
  CHECK(m.mu_at(2, 0) == doctest::Approx(0.0005));
  CHECK(m.rho_at(0, 2) == doctest::Approx(0.1));
  CHECK(m.rho_at(1, 0) == doctest::Approx(0.1));

  PenaltyStrategy lb;
  lb.kind = PenaltyKind::LowerBound;
  lb.d_max = 2;
  const auto l = penalties_for_iteration(lb, ages, std::nullopt);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(l.rho_at(i, j) == doctest::Approx(0.1 / 3.0));
  }

  PenaltyStrategy fp;
  fp.kind = PenaltyKind::FixedParameter;
  const auto f = penalties_for_iteration(fp, ages, Residuals{100.0, 0.001});
  CHECK(f.rho_at(2, 0) == 0.1);
  CHECK(f.mu_at(1, 1) == 0.001);

  PenaltyStrategy rb;
  rb.kind = PenaltyKind::ResidualBalancing;
  const auto r0 = penalties_for_iteration(rb, ages, std::nullopt);
  CHECK(r0.rho_at(0, 1) == 0.1);
  const auto up = penalties_for_iteration(rb, ages, Residuals{11.0, 1.0}, &r0);
  CHECK(up.rho_at(0, 1) == doctest::Approx(0.2));
  CHECK(up.mu_at(2, 2) == doctest::Approx(0.002));
  const auto down = penalties_for_iteration(rb, ages, Residuals{1.0, 11.0}, &up);
  CHECK(down.rho_at(0, 1) == doctest::Approx(0.1));
  const auto hold = penalties_for_iteration(rb, ages, Residuals{5.0, 1.0}, &up);
  CHECK(hold.rho_at(0, 1) == doctest::Approx(0.2));

  PenaltyStrategy bad;
  bad.rho_base = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("weighted mean") {
  Trajectory a = Trajectory::zeros(1, 1, 1), b = Trajectory::zeros(1, 1, 1);
  a.states.setConstant(1.0);
  b.states.setConstant(2.0);
  a.controls.setConstant(1.0);
  b.controls.setConstant(2.0);
  const std::vector<Trajectory> est{a, b};
  const std::vector<double> rho{2.0, 1.0}, mu{1.0, 3.0};
  const auto z = weighted_mean(est, rho, mu);
  CHECK(z.states(0, 0) == doctest::Approx(4.0 / 3.0));
  CHECK(z.controls(0, 0) == doctest::Approx(7.0 / 4.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.01, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = 1 + trial % 5;
    std::vector<Trajectory> xs;
    std::vector<double> r(m), u(m), equal(m, 0.37);
    for (int e = 0; e < m; ++e) {
      xs.push_back(random_traj(rng, 4, 2, 6));
      r[e] = w(rng);
      u[e] = w(rng);
    }
    Trajectory sum = Trajectory::zeros(4, 2, 6), num = sum;
    double rs = 0.0, us = 0.0;
    for (int e = 0; e < m; ++e) {
      sum.states += xs[e].states;
      sum.controls += xs[e].controls;
      num.states += r[e] * xs[e].states;
      num.controls += u[e] * xs[e].controls;
      rs += r[e];
      us += u[e];
    }
    const auto mean = weighted_mean(xs, equal, equal);
    CHECK((mean.states - sum.states / m).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((mean.controls - sum.controls / m).cwiseAbs().maxCoeff() <= 1e-12);
    const auto weighted = weighted_mean(xs, r, u);
    CHECK((weighted.states - num.states / rs).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((weighted.controls - num.controls / us).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(weighted_mean(est, std::vector<double>{1.0}, mu), std::invalid_argument);
}

TEST_CASE("dual update arithmetic") {
  const std::vector<std::vector<int>> N{{0}};
  Trajectory x = Trajectory::zeros(1, 1, 1), z = x;
  x.states.setConstant(1.0);
  x.controls.setConstant(2.0);
  std::vector<std::vector<Trajectory>> duals{{Trajectory::zeros(1, 1, 1)}};
  dual_update(N, duals, {{x}}, {{z}}, PenaltyMatrix::uniform(1, 0.1, 0.001));
  CHECK(duals[0][0].states(0, 0) == doctest::Approx(0.1));
  CHECK(duals[0][0].controls(0, 0) == doctest::Approx(0.002));
}

TEST_CASE("synchronous dual sums vanish per owner") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  const int n = 5, K = 4;
  std::vector<std::vector<int>> N(n);
  for (int i = 0; i < n; ++i) {
    N[i].push_back(i);
    for (int j = 0; j < n; ++j) {
      if (j != i && (i + j) % 3 != 0) N[i].push_back(j);
    }
  }
  std::vector<std::vector<Trajectory>> duals(n);
  for (int i = 0; i < n; ++i) duals[i].assign(N[i].size(), Trajectory::zeros(4, 2, K));
  for (int it = 0; it < 100; ++it) {
    PenaltyMatrix pen = PenaltyMatrix::uniform(n, 0.1, 0.001);
    for (auto& v : pen.rho) v = w(rng);
    for (auto& v : pen.mu) v = w(rng);
    std::vector<std::vector<Trajectory>> locals(n);
    for (int i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < N[i].size(); ++c) locals[i].push_back(random_traj(rng, 4, 2, K));
    }
    const auto z = global_update_weighted(N, locals, pen);
    std::vector<std::vector<Trajectory>> fresh(n);
    for (int i = 0; i < n; ++i) {
      for (int j : N[i]) fresh[i].push_back(z[j]);
    }
    dual_update(N, duals, locals, fresh, pen);
    for (int j = 0; j < n; ++j) {
      Trajectory sum = Trajectory::zeros(4, 2, K);
      for (int i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < N[i].size(); ++c) {
          if (N[i][c] != j) continue;
          sum.states += duals[i][c].states;
          sum.controls += duals[i][c].controls;
        }
      }
      CHECK(std::sqrt(sum.states.squaredNorm() + sum.controls.squaredNorm()) <= 1e-8);
    }
  }
}

TEST_CASE("residuals") {
  const std::vector<std::vector<int>> N{{0, 1}, {1, 0}};
  Trajectory one = Trajectory::zeros(1, 1, 1), zero = one;
  one.states.setConstant(1.0);
  // Every local state entry is off by one from z: 4 copies x 2 steps.
  const std::vector<std::vector<Trajectory>> locals{{one, one}, {one, one}};
  const std::vector<Trajectory> z{zero, zero};
  const auto r = compute_residuals(N, locals, z, z, PenaltyMatrix::uniform(2, 0.1, 0.001));
  CHECK(r.primal == doctest::Approx(std::sqrt(8.0)));
  CHECK(r.dual == doctest::Approx(0.0));
  const auto moved = compute_residuals(N, locals, {one, one}, z, PenaltyMatrix::uniform(2, 0.1, 0.001));
  CHECK(moved.primal == doctest::Approx(0.0));
  CHECK(moved.dual == doctest::Approx(std::sqrt(8.0) * 0.1));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> w(0.01, 1.0);
  PenaltyMatrix pen = PenaltyMatrix::uniform(2, 0.1, 0.001);
  for (auto& v : pen.rho) v = w(rng);
  for (auto& v : pen.mu) v = w(rng);
  std::vector<std::vector<Trajectory>> rl(2);
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) rl[i].push_back(random_traj(rng, 4, 2, 3));
  }
  const std::vector<Trajectory> zz{random_traj(rng, 4, 2, 3), random_traj(rng, 4, 2, 3)};
  const std::vector<Trajectory> zp{random_traj(rng, 4, 2, 3), random_traj(rng, 4, 2, 3)};
  double pr = 0.0, du = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int c = 0; c < 2; ++c) {
      const int j = N[i][c];
      for (Eigen::Index e = 0; e < rl[i][c].states.size(); ++e) {
        pr += std::pow(rl[i][c].states.data()[e] - zz[j].states.data()[e], 2);
        du += std::pow(pen.rho_at(i, j) * (zz[j].states.data()[e] - zp[j].states.data()[e]), 2);
      }
      for (Eigen::Index e = 0; e < rl[i][c].controls.size(); ++e) {
        pr += std::pow(rl[i][c].controls.data()[e] - zz[j].controls.data()[e], 2);
        du += std::pow(pen.mu_at(i, j) * (zz[j].controls.data()[e] - zp[j].controls.data()[e]), 2);
      }
    }
  }
  const auto got = compute_residuals(N, rl, zz, zp, pen);
  CHECK(got.primal == doctest::Approx(std::sqrt(pr)).epsilon(1e-12));
  CHECK(got.dual == doctest::Approx(std::sqrt(du)).epsilon(1e-12));
}

TEST_CASE("primal tolerance scales with the stacked dimension") {
  const auto p = small_circle(4, 10);
  // 16 copies of 4*11 + 2*10 entries.
  CHECK(primal_tolerance(p) == doctest::Approx(1e-3 * std::sqrt(16.0 * 64.0)));
}

TEST_CASE("run_admm bookkeeping") {
  const auto p = small_circle(4);
  AdmmOptions opt;
  opt.iterations = 1;
  opt.sqp_iters = 2;
  std::mt19937_64 rng(1);
  const auto one = run_admm(p, PenaltyStrategy{}, delay::DelayConfig{}, opt, rng);
  CHECK(one.iterations == 1);
  CHECK(one.history.size() == 1);
  CHECK(one.penalties.size() == 1);
  CHECK(one.messages == 8);
  CHECK(one.consensus.size() == 4);
  CHECK(one.status == AdmmStatus::IterationLimit);
  CHECK(one.history[0].primal > one.eps_pri);
}

TEST_CASE("synchronous runs keep per-owner dual sums at zero") {
  const auto p = small_circle(4);
  AdmmOptions opt;
  opt.iterations = 6;
  opt.sqp_iters = 1;
  opt.early_stop = false;
  std::mt19937_64 rng(2);
  const auto res = run_admm(p, PenaltyStrategy{}, delay::DelayConfig{}, opt, rng);
  for (int j = 0; j < 4; ++j) {
    Trajectory sum = Trajectory::zeros(4, 2, p.scenario.horizon);
    for (int i = 0; i < 4; ++i) {
      for (std::size_t c = 0; c < p.neighborhoods[i].size(); ++c) {
        if (p.neighborhoods[i][c] != j) continue;
        sum.states += res.duals[i][c].states;
        sum.controls += res.duals[i][c].controls;
      }
    }
    CHECK(std::sqrt(sum.states.squaredNorm() + sum.controls.squaredNorm()) <= 1e-8);
  }
}

TEST_CASE("without delays the DA, LB and FP iterates coincide") {
  const auto p = small_circle(4);
  AdmmOptions opt;
  opt.iterations = 5;
  opt.sqp_iters = 2;
  opt.record_iterates = true;
  opt.early_stop = false;
  auto run = [&](PenaltyKind kind) {
    PenaltyStrategy s;
    s.kind = kind;
    std::mt19937_64 rng(4);
    return run_admm(p, s, delay::DelayConfig{}, opt, rng);
  };
  const auto da = run(PenaltyKind::DelayAware);
  const auto lb = run(PenaltyKind::LowerBound);
  const auto fp = run(PenaltyKind::FixedParameter);
  REQUIRE(da.consensus_history.size() == 5);
  for (std::size_t t = 0; t < 5; ++t) {
    for (int j = 0; j < 4; ++j) {
      const auto& a = da.consensus_history[t][j];
      CHECK((a.states - lb.consensus_history[t][j].states).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((a.states - fp.consensus_history[t][j].states).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((a.controls - fp.consensus_history[t][j].controls).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("delay traces depend only on the seed") {
  const auto p = small_circle(4);
  AdmmOptions opt;
  opt.iterations = 4;
  opt.sqp_iters = 1;
  opt.early_stop = false;
  const delay::DelayConfig cfg{0.5, 1, 0};
  auto run = [&](PenaltyKind kind, std::uint64_t seed) {
    PenaltyStrategy s;
    s.kind = kind;
    s.d_max = 1;
    std::mt19937_64 rng(seed);
    return run_admm(p, s, cfg, opt, rng);
  };
  const auto a = run(PenaltyKind::DelayAware, 9);
  const auto b = run(PenaltyKind::DelayAware, 9);
  const auto fp = run(PenaltyKind::FixedParameter, 9);
  const auto other = run(PenaltyKind::DelayAware, 10);
  CHECK(a.delay_trace_hash == b.delay_trace_hash);
  CHECK(a.delay_trace_hash == fp.delay_trace_hash);
  CHECK(a.delay_trace_hash != other.delay_trace_hash);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t t = 0; t < a.history.size(); ++t) {
    CHECK(a.history[t].primal == b.history[t].primal);
    CHECK(a.history[t].dual == b.history[t].dual);
  }
}

TEST_CASE("infeasible local problems stop the run") {
  auto p = lone_agent(8, Eigen::Vector4d::Zero(), Eigen::Vector4d(1, 0, 0, 0));
  scenarios::Box box{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)};
  p.scenario.obstacles = {box};
  AdmmOptions opt;
  opt.iterations = 3;
  std::mt19937_64 rng(0);
  const auto res = run_admm(p, PenaltyStrategy{}, delay::DelayConfig{}, opt, rng);
  CHECK(res.status == AdmmStatus::Infeasible);
  CHECK(res.failed_agent == 0);
  CHECK(res.infeasible[0]);
  CHECK(res.iterations == 0);
}

TEST_CASE("collision rows fixed by the initial state do not make the problem infeasible") {
  // Drone positions one step ahead depend on x0 only. These two start 0.3 m
  // apart and separate at 1 m/s each, so the first-step row is violated but
  // unavoidable while later steps are easily separated.
  const int K = 10;
  ConsensusProblem p;
  p.scenario.name = "test";
  p.scenario.model = ModelKind::Drone;
  p.scenario.n_agents = 2;
  p.scenario.horizon = K;
  p.scenario.dt = 0.075;
  p.scenario.d_safe = 0.5;
  p.scenario.limits = scenarios::default_limits(ModelKind::Drone);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(9), b = a, ga = a, gb = a;
  a[0] = -0.15;
  a[3] = -1.0;
  b[0] = 0.15;
  b[3] = 1.0;
  ga[0] = -2.0;
  gb[0] = 2.0;
  p.scenario.starts = {a, b};
  p.scenario.goals = {ga, gb};
  p.x0 = {a, b};
  p.goals = {ga, gb};
  p.neighborhoods = {{0, 1}, {1, 0}};
  p.models = {dynamics::drone_model(0.075), dynamics::drone_model(0.075)};
  p.initial_guess = {straight_line_guess(a, ga, 6, K), straight_line_guess(b, gb, 6, K)};
  p.cost = default_cost(ModelKind::Drone);
  const double gap1 = ((a.head(3) + 0.075 * a.segment(3, 3)) - (b.head(3) + 0.075 * b.segment(3, 3))).norm();
  REQUIRE(gap1 < p.scenario.d_safe);
  AdmmOptions opt;
  opt.iterations = 3;
  opt.sqp_iters = 1;
  std::mt19937_64 rng(0);
  const auto res = run_admm(p, PenaltyStrategy{}, delay::DelayConfig{}, opt, rng);
  CHECK(res.status != AdmmStatus::Infeasible);
  for (int k = 2; k <= K; ++k) {
    const double d = (res.locals[0][0].states.col(k).head(3) - res.locals[0][1].states.col(k).head(3)).norm();
    CHECK(d >= p.scenario.d_safe - 1e-6);
  }
}

TEST_CASE("problem validation") {
  auto p = small_circle(2, 6);
  p.neighborhoods[0] = {1, 0};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = small_circle(2, 6);
  p.cost.q.resize(3);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = small_circle(2, 6);
  p.initial_guess[1] = straight_line_guess(p.x0[1], p.goals[1], 2, 5);
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
