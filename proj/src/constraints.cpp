#include "daadmm/constraints.hpp"

#include "daadmm/qp.hpp"

#include <algorithm>
#include <limits>

namespace daadmm::constraints {

namespace {

using Triplet = Eigen::Triplet<double>;

struct RowBuilder {
  std::vector<Triplet> entries;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<RowTag> tags;

  int next() const { return static_cast<int>(tags.size()); }
  void add(int col, double value) { entries.emplace_back(next(), col, value); }
  void close(double lo, double hi, RowTag tag) {
    lower.push_back(lo);
    upper.push_back(hi);
    tags.push_back(tag);
  }
};

}  // namespace

int LinearConstraintSet::count(RowKind kind) const {
  return static_cast<int>(std::count_if(tags.begin(), tags.end(), [&](const RowTag& t) { return t.kind == kind; }));
}

HalfSpace linearize_collision(const Eigen::VectorXd& p_ref_i, const Eigen::VectorXd& p_ref_j, double d_safe, int i,
                              int j) {
  if (p_ref_i.size() != p_ref_j.size() || p_ref_i.size() < 1) {
    throw ConstraintError("collision reference positions differ in dimension");
  }
  const Eigen::VectorXd diff = p_ref_i - p_ref_j;
  const double dist = diff.norm();
  HalfSpace h;
  h.offset = d_safe;
  if (dist >= kDegenerateEps) {
    h.normal = diff / dist;
  } else {
    const int dim = static_cast<int>(diff.size());
    h.normal = Eigen::VectorXd::Zero(dim);
    h.normal[(i + j) % dim] = i <= j ? 1.0 : -1.0;
  }
  return h;
}

int StackLayout::copy_of(int agent) const {
  const auto it = std::find(members.begin(), members.end(), agent);
  return it == members.end() ? -1 : static_cast<int>(it - members.begin());
}

StackLayout make_layout(ModelKind kind, int horizon, std::vector<int> members) {
  return {state_dim(kind), control_dim(kind), horizon, std::move(members)};
}

int expected_row_count(const StackLayout& l, const scenarios::Scenario& s) {
  const int dim = s.position_dim();
  const int n = l.copies();
  const int sb = static_cast<int>(s.limits.state_bounds.size());
  const int obs = static_cast<int>(s.obstacles.size());
  const int per_copy = l.n_x + l.K * l.n_x + l.K * l.n_u + l.K * sb + 2 * dim * obs * l.K;
  return n * per_copy + n * (n - 1) / 2 * l.K;
}

LinearConstraintSet build_local_constraints(const StackLayout& l, std::span<const Trajectory> reference,
                                            std::span<const dynamics::LinearModel> models,
                                            std::span<const Eigen::VectorXd> initial_states,
                                            const scenarios::Scenario& s) {
  const int n = l.copies();
  if (n < 1) throw ConstraintError("local problem has no members");
  if (static_cast<int>(reference.size()) != n) throw ConstraintError("reference missing for a neighbour");
  if (static_cast<int>(models.size()) != n || static_cast<int>(initial_states.size()) != n) {
    throw ConstraintError("models/initial states do not cover every member");
  }
  const int dim = s.position_dim();
  const double inf = qp::kInfinity;
  for (int c = 0; c < n; ++c) {
    if (reference[c].states.rows() != l.n_x || reference[c].states.cols() < l.K + 1) {
      throw ConstraintError("reference for agent " + std::to_string(l.members[c]) + " does not cover the horizon");
    }
    if (models[c].n_x != l.n_x || models[c].n_u != l.n_u) throw ConstraintError("model dimension mismatch");
    if (models[c].time_varying() && models[c].horizon() < l.K) throw ConstraintError("model shorter than horizon");
    if (initial_states[c].size() != l.n_x) throw ConstraintError("initial state dimension mismatch");
  }

  RowBuilder rb;
  for (int c = 0; c < n; ++c) {
    const auto& m = models[c];
    for (int d = 0; d < l.n_x; ++d) {
      rb.add(l.state(c, 0, d), 1.0);
      rb.close(initial_states[c][d], initial_states[c][d], {RowKind::InitialState, c, -1, 0});
    }
    for (int k = 0; k < l.K; ++k) {
      const auto& A = m.A_at(k);
      const auto& B = m.B_at(k);
      const auto& off = m.c_at(k);
      for (int r = 0; r < l.n_x; ++r) {
        rb.add(l.state(c, k + 1, r), 1.0);
        for (int d = 0; d < l.n_x; ++d) {
          if (A(r, d) != 0.0) rb.add(l.state(c, k, d), -A(r, d));
        }
        for (int d = 0; d < l.n_u; ++d) {
          if (B(r, d) != 0.0) rb.add(l.control(c, k, d), -B(r, d));
        }
        rb.close(off[r], off[r], {RowKind::Dynamics, c, -1, k});
      }
    }
    for (int k = 0; k < l.K; ++k) {
      for (int d = 0; d < l.n_u; ++d) {
        rb.add(l.control(c, k, d), 1.0);
        rb.close(s.limits.u_min[d], s.limits.u_max[d], {RowKind::Actuation, c, -1, k});
      }
    }
    for (int k = 1; k <= l.K; ++k) {
      for (const auto& b : s.limits.state_bounds) {
        rb.add(l.state(c, k, b.index), 1.0);
        rb.close(b.lo, b.hi, {RowKind::StateBound, c, -1, k});
      }
    }
    const double r = s.robot_radius();
    for (int o = 0; o < static_cast<int>(s.obstacles.size()); ++o) {
      const auto& box = s.obstacles[o];
      for (int k = 1; k <= l.K; ++k) {
        const Eigen::VectorXd p = reference[c].states.col(k).head(dim);
        // Faces in order +x, -x, +y, -y, ...; separation of p from each.
        int best = 0;
        double best_sep = -std::numeric_limits<double>::infinity();
        for (int f = 0; f < 2 * dim; ++f) {
          const int d = f / 2;
          const double sep = (f % 2 == 0) ? p[d] - (box.hi[d] + r) : (box.lo[d] - r) - p[d];
          if (sep > best_sep) {
            best_sep = sep;
            best = f;
          }
        }
        for (int f = 0; f < 2 * dim; ++f) {
          const int d = f / 2;
          const bool plus = f % 2 == 0;
          rb.add(l.state(c, k, d), plus ? 1.0 : -1.0);
          const double bound = plus ? box.hi[d] + r : -(box.lo[d] - r);
          rb.close(f == best ? bound : -inf, inf, {RowKind::Obstacle, c, o, k});
        }
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int k = 1; k <= l.K; ++k) {
        const HalfSpace h = linearize_collision(reference[a].states.col(k).head(dim),
                                                reference[b].states.col(k).head(dim), s.d_safe, l.members[a],
                                                l.members[b]);
        for (int d = 0; d < dim; ++d) {
          if (h.normal[d] == 0.0) continue;
          rb.add(l.state(a, k, d), h.normal[d]);
          rb.add(l.state(b, k, d), -h.normal[d]);
        }
        rb.close(h.offset, inf, {RowKind::Collision, a, b, k});
      }
    }
  }

  LinearConstraintSet out;
  out.n_vars = l.size();
  out.A.resize(rb.next(), l.size());
  out.A.setFromTriplets(rb.entries.begin(), rb.entries.end());
  out.lower = Eigen::Map<const Eigen::VectorXd>(rb.lower.data(), rb.next());
  out.upper = Eigen::Map<const Eigen::VectorXd>(rb.upper.data(), rb.next());
  out.tags = std::move(rb.tags);
  return out;
}

LinearConstraintSet append_fixed_collision_rows(const LinearConstraintSet& set, const StackLayout& l,
                                                const Trajectory& ref, std::span<const Trajectory> predictions,
                                                int dim, double d_safe, double activation_radius) {
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(set.A.nonZeros()));
  for (int r = 0; r < set.A.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(set.A, r); it; ++it) {
      entries.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
  }
  std::vector<double> lower(set.lower.data(), set.lower.data() + set.lower.size());
  std::vector<double> upper(set.upper.data(), set.upper.data() + set.upper.size());
  std::vector<RowTag> tags = set.tags;
  for (int j = 0; j < static_cast<int>(predictions.size()); ++j) {
    if (predictions[j].states.cols() < l.K + 1) throw ConstraintError("prediction shorter than the horizon");
    for (int k = 1; k <= l.K; ++k) {
      const Eigen::VectorXd pi = ref.states.col(k).head(dim);
      const Eigen::VectorXd pj = predictions[j].states.col(k).head(dim);
      if ((pi - pj).norm() >= activation_radius) continue;
      const HalfSpace h = linearize_collision(pi, pj, d_safe, 0, j + 1);
      const int row = static_cast<int>(tags.size());
      for (int d = 0; d < dim; ++d) entries.emplace_back(row, l.state(0, k, d), h.normal[d]);
      lower.push_back(h.offset + h.normal.dot(pj));
      upper.push_back(qp::kInfinity);
      tags.push_back({RowKind::Collision, 0, -1 - j, k});
    }
  }
  LinearConstraintSet out;
  out.n_vars = set.n_vars;
  out.A.resize(static_cast<Eigen::Index>(tags.size()), set.n_vars);
  out.A.setFromTriplets(entries.begin(), entries.end());
  out.lower = Eigen::Map<const Eigen::VectorXd>(lower.data(), static_cast<Eigen::Index>(lower.size()));
  out.upper = Eigen::Map<const Eigen::VectorXd>(upper.data(), static_cast<Eigen::Index>(upper.size()));
  out.tags = std::move(tags);
  return out;
}

CollisionReport verify_trajectories(std::span<const Trajectory> trajs, int dim, double d_safe,
                                    std::span<const scenarios::Box> obstacles, double tol) {
  CollisionReport rep;
  rep.min_distance = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(trajs.size());
  if (n == 0) return rep;
  const int steps = static_cast<int>(trajs[0].states.cols());
  for (const auto& t : trajs) {
    if (t.states.cols() != steps) throw ConstraintError("trajectories differ in length");
  }
  const double radius = 0.5 * d_safe;
  for (int k = 0; k < steps; ++k) {
    for (int i = 0; i < n; ++i) {
      const auto pi = trajs[i].states.col(k).head(dim);
      for (int j = i + 1; j < n; ++j) {
        const double dist = (pi - trajs[j].states.col(k).head(dim)).norm();
        rep.min_distance = std::min(rep.min_distance, dist);
        if (dist < d_safe - tol && !rep.first_violation) rep.first_violation = PairViolation{i, j, k};
      }
      for (int o = 0; o < static_cast<int>(obstacles.size()) && !rep.obstacle_hit; ++o) {
        const auto& box = obstacles[o];
        bool inside = true;
        for (int d = 0; d < dim && inside; ++d) {
          inside = pi[d] > box.lo[d] - radius + tol && pi[d] < box.hi[d] + radius - tol;
        }
        if (inside) rep.obstacle_hit = ObstacleHit{i, o, k};
      }
    }
  }
  rep.collided = rep.first_violation.has_value() || rep.obstacle_hit.has_value();
  return rep;
}

}  // namespace daadmm::constraints
