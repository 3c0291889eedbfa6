#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pianomime/env.hpp"

namespace pianomime {

// Time features for the residual: n_basis Gaussian bumps with centers evenly
// spaced over the song phase in [0, 1].
struct ResidualFeaturizer {
  int n_basis = 6;
  double width_scale = 1.0;

  Eigen::VectorXd basis(double phase) const;
};

// Low-dimensional residual over the nominal joint targets. Joints are pooled
// into groups (hand x {lateral slide, vertical slide, abduction, flexion});
// all joints in a group share one weight vector over the time basis. The
// per-joint residual is clamped to bound_prismatic meters or bound_revolute
// radians depending on the joint type.
struct ResidualPolicy {
  ResidualFeaturizer feat;
  int n_groups = 8;
  Eigen::VectorXd theta;  // n_groups * n_basis, group-major
  double bound_prismatic = 0.01;
  double bound_revolute = 0.05;

  static ResidualPolicy zeros(const ResidualFeaturizer& feat);

  int dim() const { return n_groups * feat.n_basis; }

  // Joint-space residual (dof entries, pedal excluded) at the given phase.
  Eigen::VectorXd residual(const HandModelSpec& spec, double phase) const;

  void save_json(const std::string& path) const;
  static ResidualPolicy load_json(const std::string& path);
};

// Everything needed to run one episode of one song.
struct EnvBundle {
  HandModelSpec spec;
  KeyGeometry geom;
  EnvConfig cfg;
  PianoStateTrajectory song;
  std::vector<FingertipFrame> demo;
  std::vector<Eigen::VectorXd> nominal;
};

// Plays the song with actions u_t = nominal_t + residual(phase(t)) clamped
// into joint limits; phase(t) = t / (T - 1).
EpisodeLog rollout_residual(const EnvBundle& bundle, const ResidualPolicy& policy);

}  // namespace pianomime
