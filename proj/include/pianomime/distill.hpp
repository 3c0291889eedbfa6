#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pianomime/cem.hpp"
#include "pianomime/codec.hpp"
#include "pianomime/env.hpp"
#include "pianomime/ik.hpp"
#include "pianomime/nn.hpp"
#include "pianomime/residual.hpp"

namespace pianomime {

// One processed song: goal trajectory, retargeted demonstration fingertips,
// and the IK nominal joint targets.
struct SongData {
  std::string id;
  PianoStateTrajectory song;
  std::vector<FingertipFrame> demo;
  std::vector<Eigen::VectorXd> nominal;  // size total_dof per frame

  EnvBundle bundle(const HandModelSpec& spec, const KeyGeometry& geom,
                   const EnvConfig& cfg) const;
};

// Per-song distillation data. Fingertips and goals come from the processed
// song; proprioception and actions come from the expert episode, indexed so
// that proprio[t] is the state the expert acted from at frame t and
// action[t] is what it commanded.
struct DistillEntry {
  std::string id;
  PianoStateTrajectory goals;
  std::vector<FingertipFrame> demo;
  std::vector<Eigen::VectorXd> proprio;  // q (dof) + qdot (dof) + key depressions (88)
  std::vector<Eigen::VectorXd> action;   // total_dof

  std::size_t frames() const { return goals.frames.size(); }
};

struct DistillDataset {
  std::vector<DistillEntry> songs;

  const DistillEntry& by_id(const std::string& id) const;
  void save_dir(const std::string& dir) const;
  static DistillDataset load_dir(const std::string& dir);
};

// Rolls out each song's expert residual policy and assembles the dataset.
// Songs are processed in parallel into indexed slots.
DistillDataset build_dataset(const std::vector<SongData>& songs,
                             const std::vector<ResidualPolicy>& experts,
                             const HandModelSpec& spec, const KeyGeometry& geom,
                             const EnvConfig& cfg, int jobs);

struct TrainPoint {
  int epoch = 0;
  double loss = 0.0;
};

struct HighLevelSpec {
  int goal_horizon = 10;  // latent goals consumed per prediction
  int pred_horizon = 4;   // fingertip frames predicted per invocation
  std::vector<int> hidden{64, 64};
  double lr = 1e-3;
  int epochs = 400;
  int batch = 128;
  double noise_std = 1.0;  // additive noise on the current-fingertip input
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Predicts the demonstrator's next pred_horizon fingertip frames from the
// latent goals of the upcoming goal_horizon song frames and the current
// fingertip positions.
class HighLevelPolicy {
 public:
  HighLevelPolicy() = default;
  HighLevelPolicy(HighLevelSpec spec, int latent_dim);

  const HighLevelSpec& spec() const { return spec_; }
  int latent_dim() const { return latent_dim_; }

  // latents: goal_horizon * latent_dim, current: 3 * kNumFingers.
  // Returns pred_horizon * 3 * kNumFingers.
  Eigen::VectorXd predict(const Eigen::VectorXd& latents, const Eigen::VectorXd& current) const;

  void save_json(const std::string& path) const;
  static HighLevelPolicy load_json(const std::string& path);

  friend struct HighLevelTrainer;

 private:
  HighLevelSpec spec_;
  int latent_dim_ = 0;
  Mlp net_;
  Normalizer in_norm_, out_norm_;
};

struct HighLevelTrainResult {
  HighLevelPolicy policy;
  std::vector<TrainPoint> curve;
};

HighLevelTrainResult train_high_level(const std::vector<const DistillEntry*>& songs,
                                      const GoalCodec& codec, const HighLevelSpec& spec);

enum class LowLevelMode { direct, residual };

struct LowLevelSpec {
  int horizon = 4;  // frames consumed and actions produced per invocation
  std::vector<int> hidden{64, 64};
  double lr = 1e-3;
  int epochs = 400;
  int batch = 128;
  LowLevelMode mode = LowLevelMode::direct;
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Maps (target fingertips over the chunk, latent goals over the chunk,
// proprioception at the chunk start) to the chunk's joint actions, either
// directly or as a residual on differential IK tracking of the targets.
class LowLevelPolicy {
 public:
  LowLevelPolicy() = default;
  LowLevelPolicy(LowLevelSpec spec, int latent_dim, int total_dof);

  const LowLevelSpec& spec() const { return spec_; }
  LowLevelMode mode() const { return spec_.mode; }
  int latent_dim() const { return latent_dim_; }
  int total_dof() const { return total_dof_; }

  // A policy with zero weights and identity normalization: in residual mode
  // its chunk outputs are exactly the IK actions.
  static LowLevelPolicy zeros(LowLevelSpec spec, int latent_dim, int total_dof);

  // tips: horizon * 30, latents: horizon * latent_dim, proprio: 2 dof + 88.
  // Returns horizon * total_dof actions (direct) or residuals (residual).
  Eigen::VectorXd predict(const Eigen::VectorXd& tips, const Eigen::VectorXd& latents,
                          const Eigen::VectorXd& proprio) const;

  void save_json(const std::string& path) const;
  static LowLevelPolicy load_json(const std::string& path);

  friend struct LowLevelTrainer;

 private:
  LowLevelSpec spec_;
  int latent_dim_ = 0;
  int total_dof_ = 0;
  Mlp net_;
  Normalizer in_norm_, out_norm_;
};

struct LowLevelTrainResult {
  LowLevelPolicy policy;
  std::vector<TrainPoint> curve;
};

// In residual mode the regression targets are expert action minus the IK
// action obtained by tracking the dataset fingertips from the recorded
// proprioceptive state, computed with the given spec and parameters.
LowLevelTrainResult train_low_level(const std::vector<const DistillEntry*>& songs,
                                    const GoalCodec& codec, const LowLevelSpec& spec,
                                    const HandModelSpec& hand_spec, const IkParams& ik);

// Runs the hierarchical policy on one song: every chunk the high level
// (or, with oracle_hl, the demonstration itself) proposes the next fingertip
// frames, their y coordinates are snapped to the goal keys with the retarget
// rule, and the low level turns them into joint actions. In residual mode
// the IK tracker advances from the environment's current configuration.
EpisodeLog chunked_execute(const EnvBundle& bundle, const HighLevelPolicy* hl,
                           const LowLevelPolicy& ll, const GoalCodec& codec,
                           const IkParams& ik, bool oracle_hl = false);

}  // namespace pianomime
