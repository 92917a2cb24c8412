#include "daadmm/consensus_admm.hpp"

#include <algorithm>
#include <cmath>

namespace daadmm::admm {

namespace {

using constraints::RowKind;

std::uint64_t fnv1a(std::uint64_t h, int value) {
  auto v = static_cast<std::uint32_t>(value);
  for (int b = 0; b < 4; ++b) {
    h ^= (v >> (8 * b)) & 0xffu;
    h *= 1099511628211ull;
  }
  return h;
}

Eigen::Map<const Eigen::VectorXd> flat(const Eigen::MatrixXd& m) { return {m.data(), m.size()}; }

Trajectory zeros_like(const Trajectory& t) {
  return {Eigen::MatrixXd::Zero(t.states.rows(), t.states.cols()),
          Eigen::MatrixXd::Zero(t.controls.rows(), t.controls.cols())};
}

struct CondensedRows {
  qp::SparseRowMatrix A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// Substitutes X_c = f_c + S_c U_c into every non-dynamics row.
CondensedRows condense_rows(const constraints::LinearConstraintSet& set, const constraints::StackLayout& l,
                            const std::vector<const Condensed*>& cc) {
  const int nuK = l.n_u * l.K;
  const int nxK1 = l.n_x * (l.K + 1);
  const int copy_size = l.copy_size();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.copies()) * nuK);
  std::vector<int> extent(l.copies(), -1);
  // Rows are emitted in order with ascending columns, so CSR arrays are built directly.
  std::vector<int> outer{0};
  std::vector<int> cols;
  std::vector<double> vals;
  std::vector<double> lower, upper;
  cols.reserve(static_cast<std::size_t>(set.A.nonZeros()) * 8);
  vals.reserve(cols.capacity());

  for (int r = 0; r < set.rows(); ++r) {
    const RowKind kind = set.tags[r].kind;
    if (kind == RowKind::Dynamics || kind == RowKind::InitialState) continue;
    if (qp::is_infinite_bound(set.lower[r]) && qp::is_infinite_bound(set.upper[r])) continue;
    double shift = 0.0;
    const std::size_t row_begin = cols.size();
    for (qp::SparseRowMatrix::InnerIterator it(set.A, r); it; ++it) {
      const int col = static_cast<int>(it.col());
      const int c = col / copy_size;
      const int local = col % copy_size;
      const double v = it.value();
      if (local < nxK1) {
        const int k = local / l.n_x;
        if (k > 0) acc.segment(c * nuK, l.n_u * k).noalias() += v * cc[c]->St.col(local).head(l.n_u * k);
        shift += v * cc[c]->f[local];
        extent[c] = std::max(extent[c], l.n_u * k);
      } else {
        const int u = local - nxK1;
        acc[c * nuK + u] += v;
        extent[c] = std::max(extent[c], u + 1);
      }
    }
    for (int c = 0; c < l.copies(); ++c) {
      if (extent[c] < 0) continue;
      for (int j = 0; j < extent[c]; ++j) {
        double& a = acc[c * nuK + j];
        if (a != 0.0) {
          cols.push_back(c * nuK + j);
          vals.push_back(a);
        }
        a = 0.0;
      }
      extent[c] = -1;
    }
    // A row the controls cannot move (e.g. a position already fixed by the
    // initial state) can only make the QP infeasible; leave it out.
    if (cols.size() == row_begin) continue;
    outer.push_back(static_cast<int>(cols.size()));
    lower.push_back(qp::is_infinite_bound(set.lower[r]) ? -qp::kInfinity : set.lower[r] - shift);
    upper.push_back(qp::is_infinite_bound(set.upper[r]) ? qp::kInfinity : set.upper[r] - shift);
  }
  CondensedRows out;
  out.A = Eigen::Map<const qp::SparseRowMatrix>(static_cast<Eigen::Index>(lower.size()), acc.size(),
                                                static_cast<Eigen::Index>(vals.size()), outer.data(), cols.data(),
                                                vals.data());
  out.lower = Eigen::Map<const Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size()));
  out.upper = Eigen::Map<const Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()));
  return out;
}

}  // namespace

CostWeights default_cost(ModelKind kind) {
  const int nx = state_dim(kind), nu = control_dim(kind), dim = position_dim(kind);
  CostWeights w;
  w.q = Eigen::VectorXd::Constant(nx, 0.1);
  w.q.head(dim).setOnes();
  w.r = Eigen::VectorXd::Constant(nu, 0.1);
  w.qf = 10.0 * w.q;
  return w;
}

double trajectory_cost(const Trajectory& traj, const Eigen::VectorXd& goal, const CostWeights& cost) {
  const int K = traj.horizon();
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const Eigen::VectorXd e = traj.states.col(k) - goal;
    total += e.dot(cost.q.cwiseProduct(e)) + traj.controls.col(k).dot(cost.r.cwiseProduct(traj.controls.col(k)));
  }
  const Eigen::VectorXd e = traj.states.col(K) - goal;
  return total + e.dot(cost.qf.cwiseProduct(e));
}

Trajectory straight_line_guess(const Eigen::VectorXd& x0, const Eigen::VectorXd& goal, int n_u, int horizon) {
  Trajectory t = Trajectory::zeros(static_cast<int>(x0.size()), n_u, horizon);
  for (int k = 0; k <= horizon; ++k) {
    const double s = static_cast<double>(k) / horizon;
    t.states.col(k) = (1.0 - s) * x0 + s * goal;
  }
  return t;
}

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::DelayAware: return "da";
    case PenaltyKind::LowerBound: return "lb";
    case PenaltyKind::ResidualBalancing: return "rb";
    case PenaltyKind::FixedParameter: return "fp";
  }
  return "unknown";
}

void PenaltyStrategy::validate() const {
  if (!(rho_base > 0.0) || !(mu_base > 0.0)) throw std::invalid_argument("penalty bases must be positive");
  if (!(tau > 1.0)) throw std::invalid_argument("residual-balancing tau must exceed 1");
  if (!(ratio_threshold > 1.0)) throw std::invalid_argument("residual-balancing threshold must exceed 1");
  if (d_max < 0) throw std::invalid_argument("d_max must be non-negative");
}

PenaltyMatrix PenaltyMatrix::uniform(int n, double rho, double mu) {
  const auto cells = static_cast<std::size_t>(n) * n;
  return {n, std::vector<double>(cells, rho), std::vector<double>(cells, mu)};
}

PenaltyMatrix penalties_for_iteration(const PenaltyStrategy& s, const delay::DelayState& ages,
                                      const std::optional<Residuals>& residuals, const PenaltyMatrix* previous) {
  const int n = ages.n;
  switch (s.kind) {
    case PenaltyKind::FixedParameter: return PenaltyMatrix::uniform(n, s.rho_base, s.mu_base);
    case PenaltyKind::LowerBound: {
      const double scale = 1.0 / (1.0 + s.d_max);
      return PenaltyMatrix::uniform(n, s.rho_base * scale, s.mu_base * scale);
    }
    case PenaltyKind::DelayAware: {
      PenaltyMatrix m = PenaltyMatrix::uniform(n, s.rho_base, s.mu_base);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          // Viewer i's copy of owner j travels i -> j in the LG round.
          const double scale = 1.0 / (1.0 + ages.age(delay::Round::LocalToGlobal, j, i));
          m.rho[static_cast<std::size_t>(i) * n + j] *= scale;
          m.mu[static_cast<std::size_t>(i) * n + j] *= scale;
        }
      }
      return m;
    }
    case PenaltyKind::ResidualBalancing: {
      double rho = s.rho_base, mu = s.mu_base;
      if (previous && previous->n == n && n > 0) {
        rho = previous->rho[0];
        mu = previous->mu[0];
      }
      if (residuals) {
        if (residuals->primal > s.ratio_threshold * residuals->dual) {
          rho *= s.tau;
          mu *= s.tau;
        } else if (residuals->dual > s.ratio_threshold * residuals->primal) {
          rho /= s.tau;
          mu /= s.tau;
        }
      }
      return PenaltyMatrix::uniform(n, rho, mu);
    }
  }
  return PenaltyMatrix::uniform(n, s.rho_base, s.mu_base);
}

void ConsensusProblem::validate() const {
  const int n = agents();
  const auto& s = scenario;
  const int nx = state_dim(s.model), nu = control_dim(s.model), K = s.horizon;
  if (n < 1) throw std::invalid_argument("consensus problem has no agents");
  if (static_cast<int>(goals.size()) != n || static_cast<int>(neighborhoods.size()) != n ||
      static_cast<int>(models.size()) != n || static_cast<int>(initial_guess.size()) != n) {
    throw std::invalid_argument("consensus problem arrays disagree on agent count");
  }
  for (int i = 0; i < n; ++i) {
    if (x0[i].size() != nx || goals[i].size() != nx) throw std::invalid_argument("state dimension mismatch");
    if (models[i].n_x != nx || models[i].n_u != nu) throw std::invalid_argument("model dimension mismatch");
    if (models[i].time_varying() && models[i].horizon() < K) throw std::invalid_argument("model shorter than horizon");
    if (initial_guess[i].states.rows() != nx || initial_guess[i].states.cols() != K + 1 ||
        initial_guess[i].controls.rows() != nu || initial_guess[i].controls.cols() != K) {
      throw std::invalid_argument("initial guess does not match the horizon");
    }
    const auto& N = neighborhoods[i];
    if (N.empty() || N[0] != i) throw std::invalid_argument("neighbourhood must list its owner first");
    for (std::size_t c = 0; c < N.size(); ++c) {
      if (N[c] < 0 || N[c] >= n) throw std::invalid_argument("neighbour index out of range");
      if (std::count(N.begin(), N.end(), N[c]) != 1) throw std::invalid_argument("duplicate neighbour");
    }
  }
  if (cost.q.size() != nx || cost.qf.size() != nx || cost.r.size() != nu) {
    throw std::invalid_argument("cost weights have wrong dimension");
  }
}

std::vector<Condensed> condense_owners(const ConsensusProblem& p) {
  const int K = p.scenario.horizon;
  std::vector<Condensed> out;
  out.reserve(p.agents());
  for (int j = 0; j < p.agents(); ++j) {
    const auto& m = p.models[j];
    Condensed c;
    c.S = dynamics::condensing_matrix(m, K);
    c.St = c.S.transpose();
    c.f = dynamics::free_response(m, p.x0[j], K);
    c.StS.noalias() = c.St * c.S;
    Eigen::VectorXd qbar(m.n_x * (K + 1));
    Eigen::VectorXd goal_stack(m.n_x * (K + 1));
    for (int k = 0; k <= K; ++k) {
      qbar.segment(k * m.n_x, m.n_x) = k < K ? p.cost.q : p.cost.qf;
      goal_stack.segment(k * m.n_x, m.n_x) = p.goals[j];
    }
    Eigen::VectorXd rbar(m.n_u * K);
    for (int k = 0; k < K; ++k) rbar.segment(k * m.n_u, m.n_u) = p.cost.r;
    c.cost_H.noalias() = 2.0 * c.St * qbar.asDiagonal() * c.S;
    c.cost_H.diagonal() += 2.0 * rbar;
    c.cost_g.noalias() = 2.0 * c.St * qbar.cwiseProduct(c.f - goal_stack);
    out.push_back(std::move(c));
  }
  return out;
}

LocalOutput local_update(const ConsensusProblem& p, std::span<const Condensed> condensed, const LocalInput& in,
                         int sqp_iters, std::optional<qp::WarmStart>* warm) {
  if (sqp_iters < 1) throw std::invalid_argument("sqp_iters must be at least 1");
  const int i = in.agent;
  const auto& N = p.neighborhoods.at(i);
  const int nc = static_cast<int>(N.size());
  if (static_cast<int>(in.stale_consensus.size()) != nc || static_cast<int>(in.duals.size()) != nc ||
      static_cast<int>(in.rho.size()) != nc || static_cast<int>(in.mu.size()) != nc ||
      static_cast<int>(in.reference.size()) != nc) {
    throw std::invalid_argument("local input does not cover the neighbourhood");
  }
  const auto layout = constraints::make_layout(p.scenario.model, p.scenario.horizon, N);
  const int nuK = layout.n_u * layout.K;

  std::vector<const Condensed*> cc(nc);
  std::vector<dynamics::LinearModel> models;
  std::vector<Eigen::VectorXd> x0s;
  models.reserve(nc);
  for (int c = 0; c < nc; ++c) {
    cc[c] = &condensed[N[c]];
    models.push_back(p.models[N[c]]);
    x0s.push_back(p.x0[N[c]]);
  }

  qp::QuadraticProgram problem;
  problem.q.resize(static_cast<Eigen::Index>(nc) * nuK);
  std::vector<Eigen::Triplet<double>> hess;
  hess.reserve(static_cast<std::size_t>(nc) * nuK * nuK);
  for (int c = 0; c < nc; ++c) {
    const Condensed& k = *cc[c];
    Eigen::MatrixXd H = in.rho[c] * k.StS;
    H.diagonal().array() += in.mu[c];
    Eigen::VectorXd g = k.St * (in.rho[c] * (k.f - flat(in.stale_consensus[c].states)) + flat(in.duals[c].states));
    g += flat(in.duals[c].controls) - in.mu[c] * flat(in.stale_consensus[c].controls);
    if (c == 0) {
      H += k.cost_H;
      g += k.cost_g;
    }
    for (int col = 0; col < nuK; ++col) {
      for (int row = 0; row < nuK; ++row) {
        if (H(row, col) != 0.0) hess.emplace_back(c * nuK + row, c * nuK + col, H(row, col));
      }
    }
    problem.q.segment(c * nuK, nuK) = g;
  }
  problem.P.resize(problem.q.size(), problem.q.size());
  problem.P.setFromTriplets(hess.begin(), hess.end());

  std::vector<Trajectory> ref(in.reference.begin(), in.reference.end());
  LocalOutput out;
  for (int s = 0; s < sqp_iters; ++s) {
    auto set = constraints::build_local_constraints(layout, ref, models, x0s, p.scenario);
    if (!in.fixed_predictions.empty()) {
      set = constraints::append_fixed_collision_rows(set, layout, ref[0], in.fixed_predictions,
                                                     p.scenario.position_dim(), p.scenario.d_safe,
                                                     in.activation_radius);
    }
    auto rows = condense_rows(set, layout, cc);
    problem.A = std::move(rows.A);
    problem.lower = std::move(rows.lower);
    problem.upper = std::move(rows.upper);

    qp::SolverSettings settings;
    if (warm && *warm && (*warm)->x.size() == problem.q.size() && (*warm)->y.size() == problem.A.rows()) {
      settings.warm_start = **warm;
    }
    const auto sol = qp::solve_qp(problem, settings);
    out.qp_iterations += sol.iterations;
    if (sol.status != qp::QpStatus::Solved) throw LocalInfeasible(i, sol.status);
    if (warm) *warm = qp::WarmStart{sol.x, sol.y};

    for (int c = 0; c < nc; ++c) {
      const Eigen::VectorXd U = sol.x.segment(c * nuK, nuK);
      const Eigen::VectorXd X = cc[c]->f + cc[c]->S * U;
      ref[c].states = Eigen::Map<const Eigen::MatrixXd>(X.data(), layout.n_x, layout.K + 1);
      ref[c].controls = Eigen::Map<const Eigen::MatrixXd>(U.data(), layout.n_u, layout.K);
    }
  }
  out.copies = std::move(ref);
  return out;
}

Trajectory weighted_mean(std::span<const Trajectory> estimates, std::span<const double> rho,
                         std::span<const double> mu) {
  if (estimates.empty() || rho.size() != estimates.size() || mu.size() != estimates.size()) {
    throw std::invalid_argument("weighted mean needs one weight pair per estimate");
  }
  Trajectory out = zeros_like(estimates[0]);
  double rho_sum = 0.0, mu_sum = 0.0;
  for (std::size_t e = 0; e < estimates.size(); ++e) {
    out.states += rho[e] * estimates[e].states;
    out.controls += mu[e] * estimates[e].controls;
    rho_sum += rho[e];
    mu_sum += mu[e];
  }
  if (!(rho_sum > 0.0) || !(mu_sum > 0.0)) throw std::logic_error("consensus weights sum to zero");
  out.states /= rho_sum;
  out.controls /= mu_sum;
  return out;
}

std::vector<Trajectory> global_update_weighted(const std::vector<std::vector<int>>& N,
                                               const std::vector<std::vector<Trajectory>>& received,
                                               const PenaltyMatrix& pen) {
  const int n = static_cast<int>(N.size());
  std::vector<std::vector<Trajectory>> by_owner(n);
  std::vector<std::vector<double>> rho(n), mu(n);
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < N[i].size(); ++c) {
      const int j = N[i][c];
      by_owner[j].push_back(received[i][c]);
      rho[j].push_back(pen.rho_at(i, j));
      mu[j].push_back(pen.mu_at(i, j));
    }
  }
  std::vector<Trajectory> z;
  z.reserve(n);
  for (int j = 0; j < n; ++j) z.push_back(weighted_mean(by_owner[j], rho[j], mu[j]));
  return z;
}

void dual_update(const std::vector<std::vector<int>>& N, std::vector<std::vector<Trajectory>>& duals,
                 const std::vector<std::vector<Trajectory>>& locals,
                 const std::vector<std::vector<Trajectory>>& stale, const PenaltyMatrix& pen) {
  for (std::size_t i = 0; i < N.size(); ++i) {
    for (std::size_t c = 0; c < N[i].size(); ++c) {
      const int j = N[i][c];
      duals[i][c].states += pen.rho_at(static_cast<int>(i), j) * (locals[i][c].states - stale[i][c].states);
      duals[i][c].controls += pen.mu_at(static_cast<int>(i), j) * (locals[i][c].controls - stale[i][c].controls);
    }
  }
}

Residuals compute_residuals(const std::vector<std::vector<int>>& N, const std::vector<std::vector<Trajectory>>& locals,
                            const std::vector<Trajectory>& z, const std::vector<Trajectory>& z_prev,
                            const PenaltyMatrix& pen) {
  double primal = 0.0, dual = 0.0;
  for (std::size_t i = 0; i < N.size(); ++i) {
    for (std::size_t c = 0; c < N[i].size(); ++c) {
      const int j = N[i][c];
      primal += (locals[i][c].states - z[j].states).squaredNorm();
      primal += (locals[i][c].controls - z[j].controls).squaredNorm();
      const double r = pen.rho_at(static_cast<int>(i), j), m = pen.mu_at(static_cast<int>(i), j);
      dual += r * r * (z[j].states - z_prev[j].states).squaredNorm();
      dual += m * m * (z[j].controls - z_prev[j].controls).squaredNorm();
    }
  }
  return {std::sqrt(primal), std::sqrt(dual)};
}

double primal_tolerance(const ConsensusProblem& p) {
  const int K = p.scenario.horizon;
  const int per_copy = state_dim(p.scenario.model) * (K + 1) + control_dim(p.scenario.model) * K;
  std::size_t copies = 0;
  for (const auto& N : p.neighborhoods) copies += N.size();
  return 1e-3 * std::sqrt(static_cast<double>(copies) * per_copy);
}

std::string to_string(AdmmStatus status) {
  switch (status) {
    case AdmmStatus::Converged: return "converged";
    case AdmmStatus::IterationLimit: return "iteration_limit";
    case AdmmStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

ConsensusResult run_admm(const ConsensusProblem& p, const PenaltyStrategy& strategy, const delay::DelayConfig& cfg,
                         const AdmmOptions& opt, std::mt19937_64& rng, const AdmmWarmStart* ws) {
  p.validate();
  strategy.validate();
  cfg.validate(p.scenario.horizon);
  if (opt.iterations < 1 || opt.sqp_iters < 1) throw std::invalid_argument("iteration budgets must be positive");

  const int n = p.agents();
  const auto& N = p.neighborhoods;
  const auto condensed = condense_owners(p);

  ConsensusResult res;
  res.eps_pri = primal_tolerance(p);
  res.infeasible.assign(n, false);
  res.consensus = p.initial_guess;
  res.delay_trace_hash = 1469598103934665603ull;

  std::vector<std::vector<Trajectory>> locals(n), stale(n), duals(n), received(n);
  auto warm_entry = [&](const std::vector<std::vector<Trajectory>>& src, int i, std::size_t c) -> const Trajectory* {
    if (static_cast<int>(src.size()) != n || src[i].size() != N[i].size()) return nullptr;
    const Trajectory& t = src[i][c];
    return t.states.cols() > 0 ? &t : nullptr;
  };
  for (int i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < N[i].size(); ++c) {
      const int j = N[i][c];
      const Trajectory* l = ws ? warm_entry(ws->locals, i, c) : nullptr;
      const Trajectory* y = ws ? warm_entry(ws->duals, i, c) : nullptr;
      locals[i].push_back(l ? *l : p.initial_guess[j]);
      stale[i].push_back(p.initial_guess[j]);
      duals[i].push_back(y ? *y : zeros_like(p.initial_guess[j]));
    }
    received[i] = locals[i];
  }
  std::vector<std::optional<qp::WarmStart>> warm(n);
  delay::DelayState ages = delay::DelayState::fresh(n);
  delay::StaleBuffer<Trajectory> lg(n), gl(n);
  PenaltyMatrix pen = penalties_for_iteration(strategy, ages, std::nullopt);
  std::optional<Residuals> last;

  for (int t = 0; t < opt.iterations; ++t) {
    for (int i = 0; i < n; ++i) {
      const int nc = static_cast<int>(N[i].size());
      std::vector<double> rho(nc), mu(nc);
      for (int c = 0; c < nc; ++c) {
        rho[c] = pen.rho_at(i, N[i][c]);
        mu[c] = pen.mu_at(i, N[i][c]);
      }
      const LocalInput in{i, stale[i], duals[i], rho, mu, locals[i], {}, 0.0};
      try {
        auto out = local_update(p, condensed, in, opt.sqp_iters, &warm[i]);
        res.qp_iterations += out.qp_iterations;
        locals[i] = std::move(out.copies);
        res.infeasible[i] = false;
      } catch (const LocalInfeasible& e) {
        res.infeasible[i] = true;
        if (opt.stop_on_infeasible) {
          res.status = AdmmStatus::Infeasible;
          res.failed_agent = e.agent();
          res.iterations = t;
          res.locals = std::move(locals);
          res.duals = std::move(duals);
          return res;
        }
      }
    }

    if (t > 0) ages = delay::sample_delays(ages, cfg, rng);
    for (int a : ages.age_lg) res.delay_trace_hash = fnv1a(res.delay_trace_hash, a);
    for (int a : ages.age_gl) res.delay_trace_hash = fnv1a(res.delay_trace_hash, a);

    for (int i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < N[i].size(); ++c) {
        const int j = N[i][c];
        if (ages.age(delay::Round::LocalToGlobal, j, i) == 0) lg.send(delay::Round::LocalToGlobal, j, i, locals[i][c], t);
        received[i][c] = lg.fetch(delay::Round::LocalToGlobal, j, i, t).payload;
      }
    }

    pen = penalties_for_iteration(strategy, ages, last, &pen);
    const std::vector<Trajectory> previous = res.consensus;
    res.consensus = global_update_weighted(N, received, pen);

    for (int i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < N[i].size(); ++c) {
        const int j = N[i][c];
        if (ages.age(delay::Round::GlobalToLocal, i, j) == 0) {
          gl.send(delay::Round::GlobalToLocal, i, j, res.consensus[j], t);
        }
        stale[i][c] = gl.fetch(delay::Round::GlobalToLocal, i, j, t).payload;
      }
    }

    dual_update(N, duals, locals, stale, pen);
    last = compute_residuals(N, locals, res.consensus, previous, pen);
    res.history.push_back(*last);
    res.penalties.push_back(pen);
    if (opt.record_iterates) res.consensus_history.push_back(res.consensus);
    res.messages += 2LL * n;
    res.iterations = t + 1;
    if (opt.early_stop && last->primal <= res.eps_pri) {
      res.status = AdmmStatus::Converged;
      break;
    }
  }
  res.locals = std::move(locals);
  res.duals = std::move(duals);
  return res;
}

}  // namespace daadmm::admm
