#pragma once

// Brute-force reference for small QPs: enumerate every assignment of each row
// to {inactive, at lower, at upper}, solve the equality-constrained KKT system
// densely, and keep the best point that is primal and dual feasible.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

struct DenseQp {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A;
  Eigen::VectorXd lower, upper;
};

struct OracleResult {
  Eigen::VectorXd x;
  double objective;
};

inline std::optional<OracleResult> enumerate_active_sets(const DenseQp& qp, double tol = 1e-9) {
  const int n = static_cast<int>(qp.q.size());
  const int m = static_cast<int>(qp.A.rows());
  std::optional<OracleResult> best;
  std::vector<int> state(m, 0);  // 0 inactive, 1 lower, 2 upper
  long combos = 1;
  for (int i = 0; i < m; ++i) combos *= 3;
  for (long c = 0; c < combos; ++c) {
    long code = c;
    std::vector<int> rows;
    std::vector<double> rhs;
    bool skip = false;
    for (int i = 0; i < m; ++i) {
      state[i] = static_cast<int>(code % 3);
      code /= 3;
      if (state[i] == 1) {
        if (!std::isfinite(qp.lower[i])) skip = true;
        rows.push_back(i);
        rhs.push_back(qp.lower[i]);
      } else if (state[i] == 2) {
        if (!std::isfinite(qp.upper[i]) || qp.upper[i] == qp.lower[i]) skip = true;
        rows.push_back(i);
        rhs.push_back(qp.upper[i]);
      }
    }
    if (skip) continue;
    const int k = static_cast<int>(rows.size());
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd b(n + k);
    kkt.topLeftCorner(n, n) = qp.P;
    b.head(n) = -qp.q;
    for (int j = 0; j < k; ++j) {
      kkt.block(n + j, 0, 1, n) = qp.A.row(rows[j]);
      kkt.block(0, n + j, n, 1) = qp.A.row(rows[j]).transpose();
      b[n + j] = rhs[j];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(b);
    const Eigen::VectorXd x = sol.head(n);
    const Eigen::VectorXd y = sol.tail(k);  // Px + q + A_act' y = 0
    bool ok = true;
    const Eigen::VectorXd ax = qp.A * x;
    for (int i = 0; i < m && ok; ++i) {
      if (ax[i] < qp.lower[i] - tol || ax[i] > qp.upper[i] + tol) ok = false;
    }
    for (int j = 0; j < k && ok; ++j) {
      const bool at_lower = state[rows[j]] == 1;
      const bool equality = qp.lower[rows[j]] == qp.upper[rows[j]];
      if (equality) continue;
      if (at_lower && y[j] > tol) ok = false;
      if (!at_lower && y[j] < -tol) ok = false;
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(qp.P * x) + qp.q.dot(x);
    if (!best || obj < best->objective) best = OracleResult{x, obj};
  }
  return best;
}

}  // namespace oracle
