#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <optional>
#include <stdexcept>
#include <string>

namespace daadmm::qp {

/// Bounds with magnitude at or above this value are treated as infinite.
inline constexpr double kInfinity = 1e30;

inline bool is_infinite_bound(double b) { return !(std::abs(b) < kInfinity); }

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// minimize 0.5 x'Px + q'x  subject to  lower <= Ax <= upper.
///
/// P is stored in full (both triangles). Equality rows use lower == upper.
struct QuadraticProgram {
  SparseMatrix P;
  Eigen::VectorXd q;
  SparseRowMatrix A;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_constraints() const { return A.rows(); }

  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(P * x) + q.dot(x);
  }
};

enum class QpStatus { Solved, MaxIterations, Infeasible };

std::string to_string(QpStatus status);

/// Primal solution plus row multipliers. y follows the convention
/// Px + q + A'y = 0, so y < 0 on rows held at their lower bound and y > 0 on
/// rows held at their upper bound.
struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  QpStatus status = QpStatus::MaxIterations;
  double objective = 0.0;
  int iterations = 0;
};

struct WarmStart {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
};

struct SolverSettings {
  int max_iterations = 100000;
  double feas_tol = 1e-6;
  double opt_tol = 1e-6;
  std::optional<WarmStart> warm_start;
};

/// Raised for malformed problems (dimension mismatch, asymmetric or
/// indefinite P, crossed bounds).
class QpError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct KktResiduals {
  double primal = 0.0;  ///< max bound violation of Ax
  double dual = 0.0;    ///< ||Px + q + A'y||_inf
  double complementarity = 0.0;
};

KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& y);

/// Checks the structural invariants of a QP; throws QpError on violation.
void validate(const QuadraticProgram& qp);

/// Solves a convex QP with a dual active-set (Goldfarb-Idnani) method.
///
/// The Hessian is factored per connected block of P's sparsity pattern, so
/// problems whose variables split into independent groups (one group per
/// trajectory copy) only pay for small dense factorizations. Deterministic:
/// identical inputs yield bitwise-identical outputs.
QpSolution solve_qp(const QuadraticProgram& qp, const SolverSettings& settings = {});

}  // namespace daadmm::qp
