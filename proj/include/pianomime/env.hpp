#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "pianomime/geometry.hpp"
#include "pianomime/hand_model.hpp"
#include "pianomime/piano_state.hpp"
#include "pianomime/retarget.hpp"

namespace pianomime {

struct EnvConfig {
  double control_hz = 20.0;
  double substep_hz = 500.0;     // must be an integer multiple of control_hz
  double key_travel = 0.008;     // full depression depth in meters
  double press_threshold = 0.5;  // depression fraction that counts as pressed
  double tau_track = 0.025;      // first-order joint tracking time constant
  double sigma_g = 0.01;         // reward shaping scale in meters
  double w_key = 2.0 / 3.0;
  double w_mimic = 1.0 / 3.0;
  int lookahead = 10;            // goal window length L

  int substeps_per_frame() const;
  void validate() const;
};

// Shaping kernel g(d) = 1 - tanh(d / sigma): 1 at zero distance, -> 0 for
// distances well above sigma.
double reward_shaping(double distance, double sigma);

// Depression fraction per key given fingertip positions: the deepest
// fingertip inside the key's footprint sets the key's state, keys with no
// fingertip rest at zero.
Eigen::VectorXd key_depressions(const std::array<Eigen::Vector3d, kNumFingers>& tips,
                                const KeyGeometry& geom, const EnvConfig& cfg);

struct RewardBreakdown {
  double key_press = 0.0;  // 0.5 g(goal depression error) + 0.5 (1 - any false positive)
  double mimic = 0.0;      // g over the stacked 30-dim fingertip error
  double total = 0.0;      // w_key * key_press + w_mimic * mimic
  bool false_positive = false;
};

RewardBreakdown compute_reward(const Eigen::VectorXd& key_state, const PianoState& goal,
                               const std::array<Eigen::Vector3d, kNumFingers>& robot_tips,
                               const std::array<Eigen::Vector3d, kNumFingers>& demo_tips,
                               const EnvConfig& cfg);

struct FrameRecord {
  int t = 0;
  Eigen::VectorXd q;       // configuration after the frame
  Eigen::VectorXd action;  // clamped commanded targets
  std::array<Eigen::Vector3d, kNumFingers> tips{};
  Eigen::VectorXd key_state;  // 88 depressions at frame end
  PianoState goal;
  RewardBreakdown reward;
};

struct EpisodeLog {
  double rate_hz = 20.0;
  double press_threshold = 0.5;
  std::vector<FrameRecord> frames;

  double total_reward() const;
  // Keys with depression >= threshold per frame, pedal from the joint state.
  PianoStateTrajectory pressed_trajectory() const;

  void write_jsonl(const std::string& path) const;
  static EpisodeLog read_jsonl(const std::string& path);
};

// Observation at the start of a control frame. flatten() packs, in order:
// q (dof), qdot (dof), pedal state (1), key depressions (88), goal window
// (L frames of 88 keys + pedal each), demo fingertips (30), next nominal
// action (dof + 1).
struct Observation {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
  double pedal = 0.0;
  Eigen::VectorXd key_state;
  std::vector<PianoState> goals;
  std::array<Eigen::Vector3d, kNumFingers> demo_tips{};
  Eigen::VectorXd nominal_next;

  Eigen::VectorXd flatten() const;
  static int flat_size(int dof, int lookahead);
};

// Kinematic piano environment. Joints track commanded targets with
// first-order dynamics at the substep rate; key depression is a pure
// function of fingertip positions. One step consumes the action for the
// current song frame and yields its reward; the episode ends after exactly
// one step per song frame.
class PianoEnv {
 public:
  PianoEnv(HandModelSpec spec, KeyGeometry geom, EnvConfig cfg);

  Observation reset(const PianoStateTrajectory& song, std::vector<FingertipFrame> demo,
                    std::vector<Eigen::VectorXd> nominal);

  struct StepResult {
    Observation obs;
    RewardBreakdown reward;
    bool done = false;
  };
  StepResult step(const Eigen::VectorXd& action);

  int t() const { return t_; }
  bool done() const { return done_; }
  int frame_count() const { return static_cast<int>(song_.frames.size()); }
  // True if reset() had to clamp the initial configuration into limits.
  bool reset_clamped() const { return reset_clamped_; }
  const EpisodeLog& log() const { return log_; }
  const HandModelSpec& spec() const { return spec_; }
  const KeyGeometry& geometry() const { return geom_; }
  const EnvConfig& config() const { return cfg_; }
  const Eigen::VectorXd& q() const { return q_; }

 private:
  Observation observe() const;

  HandModelSpec spec_;
  KeyGeometry geom_;
  EnvConfig cfg_;
  PianoStateTrajectory song_;
  std::vector<FingertipFrame> demo_;
  std::vector<Eigen::VectorXd> nominal_;
  Eigen::VectorXd q_;
  Eigen::VectorXd qdot_;
  Eigen::VectorXd key_state_;
  EpisodeLog log_;
  int t_ = 0;
  bool done_ = true;
  bool reset_clamped_ = false;
};

}  // namespace pianomime
