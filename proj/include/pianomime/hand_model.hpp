#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "pianomime/retarget.hpp"

namespace pianomime {

enum class JointType { revolute, prismatic };

struct JointSpec {
  std::string name;
  JointType type = JointType::revolute;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();  // in the parent frame
  double lo = 0.0;
  double hi = 0.0;
  // Fixed mounting rotation about the parent y axis applied before the joint.
  double pre_pitch = 0.0;
  // Fixed link translation applied after the joint.
  Eigen::Vector3d trans_after = Eigen::Vector3d::Zero();
};

struct FingerSpec {
  std::string name;
  Eigen::Vector3d knuckle = Eigen::Vector3d::Zero();  // from hand base, after slides
  std::vector<JointSpec> joints;
};

struct HandSpec {
  std::string name;
  Eigen::Vector3d base = Eigen::Vector3d::Zero();
  std::vector<JointSpec> root_joints;  // move the whole hand (slides)
  std::vector<FingerSpec> fingers;     // thumb, index, middle, ring, pinky

  int dof() const;
};

// Joint categories used to group actuation: lateral slide, vertical slide,
// abduction (rotation about a near-vertical axis), flexion (everything else).
enum class JointCategory { lat_slide, vert_slide, abduction, flexion };

struct JointInfo {
  int hand = 0;             // 0 left, 1 right
  int finger = -1;          // -1 for root joints
  std::string name;         // e.g. "L.index.flex1"
  JointType type = JointType::revolute;
  JointCategory category = JointCategory::flexion;
  double lo = 0.0, hi = 0.0;
};

// Two-hand kinematic model. The configuration vector q has one entry per
// joint: left hand root joints, then left fingers thumb..pinky, then the
// right hand in the same order, then the sustain pedal in the last slot.
// Pedal value >= 0.5 counts as pressed.
struct HandModelSpec {
  std::array<HandSpec, 2> hands;

  int hand_dof(int hand) const { return hands[static_cast<std::size_t>(hand)].dof(); }
  int dof() const { return hand_dof(0) + hand_dof(1); }       // without pedal
  int total_dof() const { return dof() + 1; }                 // with pedal

  // Flat joint metadata in q order (pedal excluded).
  std::vector<JointInfo> joint_infos() const;

  Eigen::VectorXd lower_limits() const;  // size total_dof, pedal in [0, 1]
  Eigen::VectorXd upper_limits() const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& q) const;
  Eigen::VectorXd home() const;  // all joints at zero, pedal up

  void validate() const;

  static HandModelSpec default_spec();
  static HandModelSpec from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

// Fingertip order matches FingertipFrame: left thumb..pinky, right
// thumb..pinky. q must have total_dof() entries; the pedal entry is ignored.
std::array<Eigen::Vector3d, kNumFingers> forward_kinematics(const HandModelSpec& spec,
                                                            const Eigen::VectorXd& q);

Eigen::Vector3d fingertip_position(const HandModelSpec& spec, const Eigen::VectorXd& q,
                                   int finger);

// Analytic positional Jacobian of one fingertip, 3 x total_dof. Columns of
// joints not on the fingertip's chain (including the pedal) are zero.
Eigen::MatrixXd fingertip_jacobian(const HandModelSpec& spec, const Eigen::VectorXd& q,
                                   int finger);

}  // namespace pianomime
