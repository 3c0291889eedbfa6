#include "pianomime/qp.hpp"

#include <string>
#include <vector>

namespace pianomime {
namespace {

enum class Bound : std::uint8_t { free_coord, at_lower, at_upper };

}  // namespace

double box_qp_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                           const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = H * x - b;
  const Eigen::VectorXd proj = (x - g).cwiseMax(lb).cwiseMin(ub);
  return (x - proj).cwiseAbs().maxCoeff();
}

QpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                      int max_iterations, double tol) {
  const Eigen::Index n = H.rows();
  if (H.cols() != n || b.size() != n || lb.size() != n || ub.size() != n)
    throw QpError("inconsistent problem dimensions");
  if (((ub - lb).array() < 0).any()) throw QpError("lower bound exceeds upper bound");

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n).cwiseMax(lb).cwiseMin(ub);
  std::vector<Bound> state(static_cast<std::size_t>(n), Bound::free_coord);

  QpResult res;
  for (int iter = 1; iter <= max_iterations; ++iter) {
    res.iterations = iter;

    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (state[static_cast<std::size_t>(i)] == Bound::free_coord) free_idx.push_back(i);

    // Candidate minimizer with the active coordinates pinned at their bounds.
    Eigen::VectorXd cand = x;
    if (!free_idx.empty()) {
      const Eigen::Index m = static_cast<Eigen::Index>(free_idx.size());
      Eigen::MatrixXd Hff(m, m);
      Eigen::VectorXd rhs(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        rhs[r] = b[free_idx[static_cast<std::size_t>(r)]];
        for (Eigen::Index c = 0; c < m; ++c)
          Hff(r, c) = H(free_idx[static_cast<std::size_t>(r)], free_idx[static_cast<std::size_t>(c)]);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (state[static_cast<std::size_t>(i)] == Bound::free_coord) continue;
        for (Eigen::Index r = 0; r < m; ++r)
          rhs[r] -= H(free_idx[static_cast<std::size_t>(r)], i) * x[i];
      }
      const Eigen::VectorXd xf = Hff.ldlt().solve(rhs);
      for (Eigen::Index r = 0; r < m; ++r) cand[free_idx[static_cast<std::size_t>(r)]] = xf[r];
    }

    // Step toward the candidate, stopping at the first blocking bound.
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    Bound blocking_side = Bound::free_coord;
    for (const Eigen::Index i : free_idx) {
      const double d = cand[i] - x[i];
      if (d > 1e-300 && cand[i] > ub[i]) {
        const double a = (ub[i] - x[i]) / d;
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = Bound::at_upper;
        }
      } else if (d < -1e-300 && cand[i] < lb[i]) {
        const double a = (lb[i] - x[i]) / d;
        if (a < alpha) {
          alpha = a;
          blocking = i;
          blocking_side = Bound::at_lower;
        }
      }
    }

    if (blocking >= 0) {
      for (const Eigen::Index i : free_idx) x[i] += alpha * (cand[i] - x[i]);
      x = x.cwiseMax(lb).cwiseMin(ub);
      x[blocking] = blocking_side == Bound::at_upper ? ub[blocking] : lb[blocking];
      state[static_cast<std::size_t>(blocking)] = blocking_side;
      continue;
    }

    x = cand.cwiseMax(lb).cwiseMin(ub);
    res.kkt_residual = box_qp_kkt_residual(H, b, lb, ub, x);
    if (res.kkt_residual <= tol) {
      res.x = x;
      return res;
    }

    // Candidate is feasible but not optimal: release the active coordinate
    // with the most negative multiplier.
    const Eigen::VectorXd g = H * x - b;
    Eigen::Index worst = -1;
    double worst_val = -1e-12;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Bound s = state[static_cast<std::size_t>(i)];
      if (s == Bound::at_lower && g[i] < worst_val) {
        worst_val = g[i];
        worst = i;
      } else if (s == Bound::at_upper && -g[i] < worst_val) {
        worst_val = -g[i];
        worst = i;
      }
    }
    if (worst < 0)
      throw QpError("stationary point failed the KKT check, residual " +
                    std::to_string(res.kkt_residual));
    state[static_cast<std::size_t>(worst)] = Bound::free_coord;
  }

  throw QpError("no convergence within " + std::to_string(max_iterations) +
                " iterations, KKT residual " + std::to_string(res.kkt_residual));
}

}  // namespace pianomime
