#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "pianomime/hand_model.hpp"
#include "pianomime/qp.hpp"
#include "pianomime/retarget.hpp"

namespace pianomime {

struct IkTask {
  int finger = 0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
};

struct IkParams {
  double gain = 1.0;        // velocity gain K
  double limit_gain = 0.05; // fraction of remaining joint range usable per step
  double damping = 1e-6;
  double lm_damping = 1e-6; // scaled by the largest task error norm
  double dt = 0.05;
  std::array<double, kNumFingers> weights{1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  int max_inner_iters = 100;  // QP active-set iteration cap
  double kkt_tol = 1e-10;
  // Re-linearizations per tracked frame; the first frame gets
  // first_frame_iters to settle from the initial configuration.
  int iters_per_frame = 8;
  int first_frame_iters = 60;
};

struct IkStepResult {
  Eigen::VectorXd qdot;    // size dof(), pedal excluded
  Eigen::VectorXd q_next;  // size total_dof(), pedal carried over
  double kkt_residual = 0.0;
  int qp_iterations = 0;
};

// One differential IK step: solves the box-constrained QP
//   min_qdot sum_i w_i || J_i qdot - K v_i ||^2 + lambda ||qdot||^2
// with v_i = (target_i - fk_i(q)) / dt and per-joint velocity bounds
// limit_gain * (limit - q) / dt, then integrates q by dt.
IkStepResult ik_step(const HandModelSpec& spec, const Eigen::VectorXd& q,
                     std::span<const IkTask> tasks, const IkParams& params);

struct TrackFrameInfo {
  double kkt_residual = 0.0;   // of the frame's final QP solve
  double max_tip_error = 0.0;  // meters, after the frame's iterations
};

struct TrackResult {
  std::vector<Eigen::VectorXd> q;  // one configuration per frame, size total_dof()
  std::vector<TrackFrameInfo> info;
};

// Tracks a fingertip trajectory frame by frame, all ten fingertips as tasks.
// If pedal is non-empty it must have one flag per frame and is copied into
// the pedal coordinate.
TrackResult track_trajectory(const HandModelSpec& spec, const Eigen::VectorXd& q0,
                             const std::vector<FingertipFrame>& frames, const IkParams& params,
                             std::span<const std::uint8_t> pedal = {});

}  // namespace pianomime
