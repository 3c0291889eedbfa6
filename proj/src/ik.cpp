#include "pianomime/ik.hpp"

#include <algorithm>
#include <stdexcept>

namespace pianomime {

IkStepResult ik_step(const HandModelSpec& spec, const Eigen::VectorXd& q,
                     std::span<const IkTask> tasks, const IkParams& params) {
  const int n = spec.dof();
  if (q.size() != spec.total_dof())
    throw std::invalid_argument("ik_step: configuration size mismatch");

  std::array<bool, kNumFingers> seen{};
  for (const auto& t : tasks) {
    if (t.finger < 0 || t.finger >= kNumFingers)
      throw std::invalid_argument("ik_step: finger index out of range");
    if (seen[static_cast<std::size_t>(t.finger)])
      throw std::invalid_argument("ik_step: duplicate task for finger " + std::to_string(t.finger));
    seen[static_cast<std::size_t>(t.finger)] = true;
  }

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  double max_err = 0.0;
  for (const auto& t : tasks) {
    const Eigen::Vector3d e = t.target - fingertip_position(spec, q, t.finger);
    max_err = std::max(max_err, e.norm());
    const Eigen::MatrixXd J = fingertip_jacobian(spec, q, t.finger).leftCols(n);
    const Eigen::Vector3d v = params.gain * e / params.dt;
    const double w = params.weights[static_cast<std::size_t>(t.finger)];
    H.noalias() += w * J.transpose() * J;
    c.noalias() += w * J.transpose() * v;
  }
  const double lambda = params.damping + params.lm_damping * max_err;
  H.diagonal().array() += lambda;

  const Eigen::VectorXd lo = spec.lower_limits().head(n);
  const Eigen::VectorXd hi = spec.upper_limits().head(n);
  const Eigen::VectorXd qh = q.head(n);
  const Eigen::VectorXd lb = params.limit_gain * (lo - qh) / params.dt;
  const Eigen::VectorXd ub = params.limit_gain * (hi - qh) / params.dt;

  const QpResult qp = solve_box_qp(H, c, lb, ub, params.max_inner_iters, params.kkt_tol);

  IkStepResult out;
  out.qdot = qp.x;
  out.kkt_residual = qp.kkt_residual;
  out.qp_iterations = qp.iterations;
  out.q_next = q;
  out.q_next.head(n) = (qh + qp.x * params.dt).cwiseMax(lo).cwiseMin(hi);
  return out;
}

TrackResult track_trajectory(const HandModelSpec& spec, const Eigen::VectorXd& q0,
                             const std::vector<FingertipFrame>& frames, const IkParams& params,
                             std::span<const std::uint8_t> pedal) {
  if (!pedal.empty() && pedal.size() != frames.size())
    throw std::invalid_argument("track_trajectory: pedal flags must match frame count");

  TrackResult result;
  result.q.reserve(frames.size());
  result.info.reserve(frames.size());

  Eigen::VectorXd q = spec.clamp(q0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::vector<IkTask> tasks(kNumFingers);
    for (int i = 0; i < kNumFingers; ++i)
      tasks[static_cast<std::size_t>(i)] = {i, frames[f].tips[static_cast<std::size_t>(i)]};

    const int iters = f == 0 ? std::max(params.first_frame_iters, params.iters_per_frame)
                             : params.iters_per_frame;
    TrackFrameInfo info;
    for (int it = 0; it < iters; ++it) {
      const IkStepResult step = ik_step(spec, q, tasks, params);
      q = step.q_next;
      info.kkt_residual = step.kkt_residual;
    }
    if (!pedal.empty()) q[spec.dof()] = pedal[f] ? 1.0 : 0.0;

    const auto tips = forward_kinematics(spec, q);
    double err = 0.0;
    for (int i = 0; i < kNumFingers; ++i)
      err = std::max(err, (tips[static_cast<std::size_t>(i)] -
                           frames[f].tips[static_cast<std::size_t>(i)]).norm());
    info.max_tip_error = err;

    result.q.push_back(q);
    result.info.push_back(info);
  }
  return result;
}

}  // namespace pianomime
