#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace pianomime {

class QpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QpResult {
  Eigen::VectorXd x;
  double kkt_residual = 0.0;  // infinity norm of the projected gradient
  int iterations = 0;
};

// Minimizes 0.5 x' H x - b' x subject to lb <= x <= ub for symmetric positive
// definite H, by a primal active-set method. The KKT residual reported is
// || x - clamp(x - (H x - b), lb, ub) ||_inf, which is zero exactly at the
// optimum. Throws QpError if the residual has not reached tol within
// max_iterations, or if the bounds are inconsistent.
QpResult solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                      int max_iterations = 100, double tol = 1e-10);

double box_qp_kkt_residual(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                           const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                           const Eigen::VectorXd& x);

}  // namespace pianomime
