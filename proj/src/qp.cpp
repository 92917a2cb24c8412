#include "daadmm/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace daadmm::qp {

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "solved";
    case QpStatus::MaxIterations: return "max_iterations";
    case QpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

void validate(const QuadraticProgram& qp) {
  const Eigen::Index n = qp.q.size();
  const Eigen::Index m = qp.A.rows();
  if (qp.P.rows() != n || qp.P.cols() != n) {
    throw QpError("P must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (m > 0 && qp.A.cols() != n) {
    throw QpError("A has " + std::to_string(qp.A.cols()) + " columns, expected " + std::to_string(n));
  }
  if (qp.lower.size() != m || qp.upper.size() != m) {
    throw QpError("bound vectors must have one entry per row of A");
  }
  if (!qp.q.allFinite()) throw QpError("q has non-finite entries");
  const SparseMatrix asym = SparseMatrix(qp.P.transpose()) - qp.P;
  for (int k = 0; k < asym.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(asym, k); it; ++it) {
      if (!(std::abs(it.value()) <= 1e-9)) throw QpError("P is not symmetric");
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::isnan(qp.lower[i]) || std::isnan(qp.upper[i]) || qp.lower[i] > qp.upper[i]) {
      throw QpError("row " + std::to_string(i) + " has lower > upper");
    }
  }
}

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y) {
  KktResiduals res;
  const Eigen::VectorXd ax = qp.A * x;
  for (Eigen::Index i = 0; i < ax.size(); ++i) {
    double viol = 0.0;
    if (!is_infinite_bound(qp.lower[i])) viol = std::max(viol, qp.lower[i] - ax[i]);
    if (!is_infinite_bound(qp.upper[i])) viol = std::max(viol, ax[i] - qp.upper[i]);
    res.primal = std::max(res.primal, viol);
    // y < 0 pairs with the lower bound, y > 0 with the upper bound.
    if (y[i] < 0.0 && !is_infinite_bound(qp.lower[i])) {
      res.complementarity = std::max(res.complementarity, -y[i] * std::abs(ax[i] - qp.lower[i]));
    } else if (y[i] > 0.0 && !is_infinite_bound(qp.upper[i])) {
      res.complementarity = std::max(res.complementarity, y[i] * std::abs(ax[i] - qp.upper[i]));
    }
  }
  Eigen::VectorXd grad = qp.P * x + qp.q;
  if (qp.A.rows() > 0) grad += qp.A.transpose() * y;
  res.dual = grad.size() > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;
  return res;
}

namespace {

constexpr double kPsdTolerance = 1e-6;

// Dense Cholesky factors of the connected diagonal blocks of a sparse SPD
// matrix. Solving skips blocks whose right-hand side is identically zero.
class BlockFactor {
 public:
  // Returns false when some block is PSD but singular.
  bool factor(const SparseMatrix& P, double shift) {
    const Eigen::Index n = P.rows();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    auto find = [&](Eigen::Index a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (int k = 0; k < P.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(P, k); it; ++it) {
        if (it.value() == 0.0) continue;
        const Eigen::Index a = find(it.row());
        const Eigen::Index b = find(it.col());
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
    block_of_.assign(static_cast<std::size_t>(n), -1);
    local_of_.assign(static_cast<std::size_t>(n), -1);
    blocks_.clear();
    std::vector<int> root_block(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index r = find(i);
      if (root_block[r] < 0) {
        root_block[r] = static_cast<int>(blocks_.size());
        blocks_.emplace_back();
      }
      Block& blk = blocks_[root_block[r]];
      block_of_[i] = root_block[r];
      local_of_[i] = static_cast<Eigen::Index>(blk.index.size());
      blk.index.push_back(i);
    }
    bool ok = true;
    for (Block& blk : blocks_) {
      const auto sz = static_cast<Eigen::Index>(blk.index.size());
      Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(sz, sz);
      for (Eigen::Index a = 0; a < sz; ++a) {
        const Eigen::Index col = blk.index[a];
        for (SparseMatrix::InnerIterator it(P, col); it; ++it) {
          dense(local_of_[it.row()], a) = it.value();
        }
      }
      const Eigen::MatrixXd shifted = dense + shift * Eigen::MatrixXd::Identity(sz, sz);
      blk.llt.compute(shifted);
      if (blk.llt.info() != Eigen::Success || blk.llt.matrixLLT().diagonal().minCoeff() <= 0.0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dense, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -kPsdTolerance) {
          throw QpError("P is not positive semidefinite (eigenvalue " +
                        std::to_string(eig.eigenvalues().minCoeff()) + ")");
        }
        ok = false;
      }
    }
    return ok;
  }

  void solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& out) const {
    out.setZero(rhs.size());
    Eigen::VectorXd seg;
    for (const Block& blk : blocks_) {
      const auto sz = static_cast<Eigen::Index>(blk.index.size());
      bool any = false;
      for (Eigen::Index i : blk.index) {
        if (rhs[i] != 0.0) {
          any = true;
          break;
        }
      }
      if (!any) continue;
      seg.resize(sz);
      for (Eigen::Index a = 0; a < sz; ++a) seg[a] = rhs[blk.index[a]];
      blk.llt.solveInPlace(seg);
      for (Eigen::Index a = 0; a < sz; ++a) out[blk.index[a]] = seg[a];
    }
  }

 private:
  struct Block {
    std::vector<Eigen::Index> index;
    Eigen::LLT<Eigen::MatrixXd> llt;
  };
  std::vector<Block> blocks_;
  std::vector<int> block_of_;
  std::vector<Eigen::Index> local_of_;
};

// One side of a two-sided row: sign * a_row' x >= sign * bound.
struct Side {
  Eigen::Index row;
  double sign;
  bool equality;
};

enum class AddResult { Added, Redundant, Infeasible, IterationLimit };

// Goldfarb-Idnani dual active-set method in range-space form. The working
// set is represented by the Cholesky factor of S = C_W H^{-1} C_W'.
class DualActiveSet {
 public:
  DualActiveSet(const QuadraticProgram& qp, const BlockFactor& h, const Eigen::VectorXd& g,
                const SolverSettings& settings, int iteration_budget)
      : qp_(qp), h_(h), g_(g), settings_(settings), budget_(iteration_budget) {
    const Eigen::Index m = qp.A.rows();
    lower_side_.assign(static_cast<std::size_t>(m), -1);
    upper_side_.assign(static_cast<std::size_t>(m), -1);
    for (Eigen::Index r = 0; r < m; ++r) {
      const bool lo = !is_infinite_bound(qp.lower[r]);
      const bool hi = !is_infinite_bound(qp.upper[r]);
      if (lo && hi && qp.lower[r] == qp.upper[r]) {
        lower_side_[r] = add_side({r, 1.0, true});
        continue;
      }
      if (lo) lower_side_[r] = add_side({r, 1.0, false});
      if (hi) upper_side_[r] = add_side({r, -1.0, false});
    }
    in_working_.assign(sides_.size(), 0);
    h_.solve(g_, hg_);
  }

  QpStatus run(const std::vector<int>& warm_sides) {
    x_ = -hg_;
    for (std::size_t s = 0; s < sides_.size(); ++s) {
      if (!sides_[s].equality) continue;
      const AddResult res = add_constraint(static_cast<int>(s), true);
      if (res == AddResult::Infeasible) return QpStatus::Infeasible;
      if (res == AddResult::IterationLimit) return QpStatus::MaxIterations;
    }
    if (!warm_sides.empty()) seed_working_set(warm_sides);

    for (int polish_round = 0;; ++polish_round) {
      for (;;) {
        ax_ = qp_.A * x_;
        const int p = most_violated();
        if (p < 0) break;
        const AddResult res = add_constraint(p, false);
        if (res == AddResult::Infeasible) return QpStatus::Infeasible;
        if (res == AddResult::IterationLimit) return QpStatus::MaxIterations;
      }
      // Recompute the iterate from the working set to shed accumulated
      // rounding from the incremental updates.
      const bool dropped = recompute_from_working_set(true);
      ax_ = qp_.A * x_;
      if (!dropped && most_violated(settings_.feas_tol) < 0) return QpStatus::Solved;
      if (polish_round > 20 || iterations_ >= budget_) return QpStatus::MaxIterations;
    }
  }

  const Eigen::VectorXd& x() const { return x_; }
  int iterations() const { return iterations_; }

  Eigen::VectorXd row_multipliers() const {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(qp_.A.rows());
    for (std::size_t j = 0; j < working_.size(); ++j) {
      const Side& s = sides_[working_[j]];
      y[s.row] += -s.sign * lambda_[j];
    }
    return y;
  }

  std::vector<int> working_sides() const { return working_; }

  // Sides implied by a multiplier vector in the y convention.
  std::vector<int> sides_from_multipliers(const Eigen::VectorXd& y) const {
    std::vector<int> out;
    if (y.size() != qp_.A.rows()) return out;
    for (Eigen::Index r = 0; r < y.size(); ++r) {
      if (y[r] < 0.0 && lower_side_[r] >= 0 && !sides_[lower_side_[r]].equality) {
        out.push_back(lower_side_[r]);
      } else if (y[r] > 0.0 && upper_side_[r] >= 0) {
        out.push_back(upper_side_[r]);
      }
    }
    return out;
  }

 private:
  int add_side(Side s) {
    sides_.push_back(s);
    return static_cast<int>(sides_.size()) - 1;
  }

  double bound(const Side& s) const {
    return s.sign > 0.0 ? qp_.lower[s.row] : -qp_.upper[s.row];
  }

  double slack(int side) const {
    const Side& s = sides_[side];
    return s.sign * ax_[s.row] - bound(s);
  }

  double row_dot(const Side& s, const Eigen::VectorXd& v) const {
    double acc = 0.0;
    for (SparseRowMatrix::InnerIterator it(qp_.A, s.row); it; ++it) acc += it.value() * v[it.col()];
    return s.sign * acc;
  }

  void row_axpy(const Side& s, double alpha, Eigen::VectorXd& out) const {
    for (SparseRowMatrix::InnerIterator it(qp_.A, s.row); it; ++it) {
      out[it.col()] += alpha * s.sign * it.value();
    }
  }

  int most_violated(double tol = -1.0) const {
    if (tol < 0.0) tol = 0.1 * settings_.feas_tol;
    int best = -1;
    double worst = -tol;
    for (std::size_t s = 0; s < sides_.size(); ++s) {
      if (in_working_[s]) continue;
      const double sl = slack(static_cast<int>(s));
      if (sl < worst) {
        worst = sl;
        best = static_cast<int>(s);
      }
    }
    return best;
  }

  // S^{-1} b via the stored factor.
  Eigen::VectorXd chol_solve(const Eigen::VectorXd& b) const {
    const Eigen::Index m = static_cast<Eigen::Index>(working_.size());
    Eigen::VectorXd w = b;
    for (Eigen::Index i = 0; i < m; ++i) {
      double acc = w[i];
      for (Eigen::Index k = 0; k < i; ++k) acc -= chol_(i, k) * w[k];
      w[i] = acc / chol_(i, i);
    }
    for (Eigen::Index i = m - 1; i >= 0; --i) {
      double acc = w[i];
      for (Eigen::Index k = i + 1; k < m; ++k) acc -= chol_(k, i) * w[k];
      w[i] = acc / chol_(i, i);
    }
    return w;
  }

  Eigen::VectorXd forward_solve(const Eigen::VectorXd& b) const {
    const Eigen::Index m = static_cast<Eigen::Index>(working_.size());
    Eigen::VectorXd w = b;
    for (Eigen::Index i = 0; i < m; ++i) {
      double acc = w[i];
      for (Eigen::Index k = 0; k < i; ++k) acc -= chol_(i, k) * w[k];
      w[i] = acc / chol_(i, i);
    }
    return w;
  }

  Eigen::VectorXd backward_solve(const Eigen::VectorXd& b) const {
    const Eigen::Index m = static_cast<Eigen::Index>(working_.size());
    Eigen::VectorXd w = b;
    for (Eigen::Index i = m - 1; i >= 0; --i) {
      double acc = w[i];
      for (Eigen::Index k = i + 1; k < m; ++k) acc -= chol_(k, i) * w[k];
      w[i] = acc / chol_(i, i);
    }
    return w;
  }

  void chol_append(const Eigen::VectorXd& l, double diag) {
    const Eigen::Index m = static_cast<Eigen::Index>(working_.size());
    if (chol_.rows() < m + 1) {
      const Eigen::Index cap = std::max<Eigen::Index>(16, 2 * (m + 1));
      Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(cap, cap);
      grown.topLeftCorner(m, m) = chol_.topLeftCorner(m, m);
      chol_.swap(grown);
    }
    chol_.row(m).head(m) = l.transpose();
    chol_(m, m) = diag;
  }

  void chol_delete(Eigen::Index k) {
    const Eigen::Index m = static_cast<Eigen::Index>(working_.size());
    const Eigen::Index tail = m - k - 1;
    Eigen::VectorXd w = chol_.col(k).segment(k + 1, tail);
    // Rank-one update of the trailing factor absorbs the removed column.
    for (Eigen::Index j = 0; j < tail; ++j) {
      const Eigen::Index jj = k + 1 + j;
      const double ljj = chol_(jj, jj);
      const double r = std::hypot(ljj, w[j]);
      const double c = r / ljj;
      const double s = w[j] / ljj;
      chol_(jj, jj) = r;
      for (Eigen::Index i = j + 1; i < tail; ++i) {
        const Eigen::Index ii = k + 1 + i;
        chol_(ii, jj) = (chol_(ii, jj) + s * w[i]) / c;
        w[i] = c * w[i] - s * chol_(ii, jj);
      }
    }
    for (Eigen::Index i = k; i + 1 < m; ++i) {
      for (Eigen::Index c = 0; c < k; ++c) chol_(i, c) = chol_(i + 1, c);
      for (Eigen::Index c = k; c <= i; ++c) chol_(i, c) = chol_(i + 1, c + 1);
    }
  }

  void drop(std::size_t k) {
    chol_delete(static_cast<Eigen::Index>(k));
    in_working_[working_[k]] = 0;
    working_.erase(working_.begin() + static_cast<std::ptrdiff_t>(k));
    lambda_.erase(lambda_.begin() + static_cast<std::ptrdiff_t>(k));
  }

  Eigen::VectorXd working_times(const Eigen::VectorXd& v) const {
    Eigen::VectorXd u(static_cast<Eigen::Index>(working_.size()));
    for (std::size_t j = 0; j < working_.size(); ++j) u[j] = row_dot(sides_[working_[j]], v);
    return u;
  }

  Eigen::VectorXd working_transpose_times(const Eigen::VectorXd& r) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x_.size());
    for (std::size_t j = 0; j < working_.size(); ++j) row_axpy(sides_[working_[j]], r[j], out);
    return out;
  }

  Eigen::VectorXd side_vector(const Side& s) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(x_.size());
    row_axpy(s, 1.0, c);
    return c;
  }

  // Appends as many of the proposed sides as are linearly independent, then
  // drops sides with negative multipliers until the point is dual feasible.
  void seed_working_set(const std::vector<int>& proposed) {
    Eigen::VectorXd v;
    for (int p : proposed) {
      if (in_working_[p]) continue;
      const Side& s = sides_[p];
      h_.solve(side_vector(s), v);
      const double cpv = row_dot(s, v);
      const Eigen::VectorXd l = forward_solve(working_times(v));
      const double d2 = cpv - l.squaredNorm();
      if (!(d2 > 1e-10 * std::max(cpv, 1e-300))) continue;
      chol_append(l, std::sqrt(d2));
      working_.push_back(p);
      lambda_.push_back(0.0);
      in_working_[p] = 1;
    }
    recompute_from_working_set(true);
  }

  // lambda = S^{-1}(b_W + C_W H^{-1} g); x = H^{-1}(C_W' lambda - g).
  // Returns true if any inequality had to be dropped.
  bool recompute_from_working_set(bool drop_negative) {
    bool dropped = false;
    for (;;) {
      const Eigen::Index m = static_cast<Eigen::Index>(working_.size());
      Eigen::VectorXd rhs(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Side& s = sides_[working_[j]];
        rhs[j] = bound(s) + row_dot(s, hg_);
      }
      const Eigen::VectorXd lam = chol_solve(rhs);
      std::size_t worst = working_.size();
      double worst_val = 0.0;
      for (std::size_t j = 0; j < working_.size(); ++j) {
        if (sides_[working_[j]].equality) continue;
        if (lam[j] < worst_val) {
          worst_val = lam[j];
          worst = j;
        }
      }
      if (drop_negative && worst < working_.size() && worst_val < -1e-12 * (1.0 + lam.lpNorm<Eigen::Infinity>())) {
        drop(worst);
        ++iterations_;
        dropped = true;
        continue;
      }
      for (Eigen::Index j = 0; j < m; ++j) {
        lambda_[j] = sides_[working_[j]].equality ? lam[j] : std::max(0.0, lam[j]);
      }
      Eigen::VectorXd rhs_x = working_transpose_times(Eigen::Map<const Eigen::VectorXd>(lambda_.data(), m)) - g_;
      h_.solve(rhs_x, x_);
      return dropped;
    }
  }

  AddResult add_constraint(int p, bool equality_phase) {
    const Side& sp = sides_[p];
    const Eigen::VectorXd cp = side_vector(sp);
    Eigen::VectorXd v;
    h_.solve(cp, v);
    const double cpv = row_dot(sp, v);
    double lambda_p = 0.0;
    Eigen::VectorXd z;
    for (;;) {
      if (++iterations_ > budget_) return AddResult::IterationLimit;
      const Eigen::VectorXd u = working_times(v);
      const Eigen::VectorXd l = forward_solve(u);
      const Eigen::VectorXd r = backward_solve(l);
      const double d2 = cpv - l.squaredNorm();
      const bool dependent = !(d2 > 1e-10 * std::max(cpv, 1e-300));
      if (!dependent) {
        h_.solve(working_transpose_times(r), z);
        z = v - z;
      }
      const double sp_val = row_dot(sp, x_) - bound(sp);

      if (equality_phase) {
        if (dependent) {
          return std::abs(sp_val) <= settings_.feas_tol ? AddResult::Redundant : AddResult::Infeasible;
        }
        const double t = -sp_val / d2;
        x_ += t * z;
        for (std::size_t j = 0; j < working_.size(); ++j) lambda_[j] -= t * r[j];
        chol_append(l, std::sqrt(d2));
        working_.push_back(p);
        lambda_.push_back(t);
        in_working_[p] = 1;
        return AddResult::Added;
      }

      double t1 = std::numeric_limits<double>::infinity();
      std::size_t k_drop = working_.size();
      const double r_floor = 1e-12 * (1.0 + (r.size() > 0 ? r.lpNorm<Eigen::Infinity>() : 0.0));
      for (std::size_t j = 0; j < working_.size(); ++j) {
        if (sides_[working_[j]].equality || !(r[j] > r_floor)) continue;
        const double ratio = lambda_[j] / r[j];
        if (ratio < t1) {
          t1 = ratio;
          k_drop = j;
        }
      }
      const double t2 = dependent ? std::numeric_limits<double>::infinity() : std::max(0.0, -sp_val / d2);
      if (std::isinf(t1) && std::isinf(t2)) return AddResult::Infeasible;

      if (t2 <= t1) {
        x_ += t2 * z;
        for (std::size_t j = 0; j < working_.size(); ++j) lambda_[j] -= t2 * r[j];
        lambda_p += t2;
        chol_append(l, std::sqrt(d2));
        working_.push_back(p);
        lambda_.push_back(lambda_p);
        in_working_[p] = 1;
        return AddResult::Added;
      }
      if (!dependent) x_ += t1 * z;
      for (std::size_t j = 0; j < working_.size(); ++j) lambda_[j] -= t1 * r[j];
      lambda_p += t1;
      drop(k_drop);
    }
  }

  const QuadraticProgram& qp_;
  const BlockFactor& h_;
  const Eigen::VectorXd& g_;
  const SolverSettings& settings_;
  int budget_;

  std::vector<Side> sides_;
  std::vector<int> lower_side_, upper_side_;
  std::vector<char> in_working_;
  std::vector<int> working_;
  std::vector<double> lambda_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd hg_, x_, ax_;
  int iterations_ = 0;
};

}  // namespace

QpSolution solve_qp(const QuadraticProgram& qp, const SolverSettings& settings) {
  validate(qp);
  if (settings.max_iterations < 1) throw QpError("max_iterations must be >= 1");
  if (!(settings.feas_tol > 0.0) || !(settings.opt_tol > 0.0)) throw QpError("tolerances must be positive");

  const Eigen::Index n = qp.q.size();
  QpSolution sol;
  BlockFactor factor;
  const bool definite = factor.factor(qp.P, 0.0);

  std::vector<int> warm;
  auto seed_from = [&](const DualActiveSet& das) {
    if (settings.warm_start && settings.warm_start->y.size() == qp.A.rows()) {
      warm = das.sides_from_multipliers(settings.warm_start->y);
    }
  };

  if (definite) {
    DualActiveSet das(qp, factor, qp.q, settings, settings.max_iterations);
    seed_from(das);
    sol.status = das.run(warm);
    sol.x = das.x();
    sol.y = das.row_multipliers();
    sol.iterations = das.iterations();
  } else {
    // Proximal-point outer loop: each pass solves with P + eps*I and a
    // linear term recentred on the previous iterate.
    double scale = 1.0;
    for (int k = 0; k < qp.P.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    }
    const double eps = 1e-4 * scale;
    BlockFactor shifted;
    shifted.factor(qp.P, eps);
    Eigen::VectorXd center = settings.warm_start && settings.warm_start->x.size() == n
                                 ? settings.warm_start->x
                                 : Eigen::VectorXd::Zero(n);
    sol.status = QpStatus::MaxIterations;
    int used = 0;
    for (int outer = 0; outer < 1000 && used < settings.max_iterations; ++outer) {
      const Eigen::VectorXd g = qp.q - eps * center;
      DualActiveSet das(qp, shifted, g, settings, settings.max_iterations - used);
      if (outer == 0) seed_from(das);
      const QpStatus st = das.run(warm);
      used += das.iterations();
      sol.x = das.x();
      sol.y = das.row_multipliers();
      warm = das.working_sides();
      if (st != QpStatus::Solved) {
        sol.status = st;
        break;
      }
      const double step = (sol.x - center).lpNorm<Eigen::Infinity>();
      center = sol.x;
      if (step <= 1e-10 * (1.0 + sol.x.lpNorm<Eigen::Infinity>())) {
        sol.status = QpStatus::Solved;
        break;
      }
    }
    sol.iterations = used;
  }
  sol.objective = qp.objective(sol.x);
  return sol;
}

}  // namespace daadmm::qp
