#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "pianomime/config.hpp"
#include "pianomime/distill.hpp"
#include "pianomime/metrics.hpp"
#include "pianomime/synth.hpp"

namespace pianomime {

// File layout of a generated corpus: one directory per song holding the MIDI
// file, the pixel-space fingertip tracks, and the camera correspondences,
// plus a manifest listing the song ids.
struct CorpusLayout {
  std::string root;

  std::string song_dir(const std::string& id) const { return root + "/" + id; }
  std::string midi(const std::string& id) const { return song_dir(id) + "/song.mid"; }
  std::string demo_pixel_csv(const std::string& id) const {
    return song_dir(id) + "/demo_pixel.csv";
  }
  std::string correspondences_csv(const std::string& id) const {
    return song_dir(id) + "/correspondences.csv";
  }
  std::string manifest() const { return root + "/manifest.json"; }

  std::vector<std::string> ids() const;
  void write_manifest(const std::vector<std::string>& ids) const;
};

// File layout of a pipeline run directory.
struct RunLayout {
  std::string root;

  std::string song_dir(const std::string& id) const { return root + "/" + id; }
  std::string song_csv(const std::string& id) const { return song_dir(id) + "/song.csv"; }
  std::string song_json(const std::string& id) const { return song_dir(id) + "/song.json"; }
  std::string aligned_csv(const std::string& id) const { return song_dir(id) + "/aligned.csv"; }
  std::string nominal_csv(const std::string& id) const { return song_dir(id) + "/nominal.csv"; }
  std::string expert_json(const std::string& id) const { return song_dir(id) + "/expert.json"; }
  std::string expert_curve_csv(const std::string& id) const {
    return song_dir(id) + "/expert_curve.csv";
  }
  std::string codec_json() const { return root + "/codec.json"; }
  std::string codec_curve_csv() const { return root + "/codec_curve.csv"; }
  std::string dataset_dir() const { return root + "/dataset"; }
  std::string hl_json() const { return root + "/high_level.json"; }
  std::string ll_json() const { return root + "/low_level.json"; }
  std::string hl_curve_csv() const { return root + "/high_level_curve.csv"; }
  std::string ll_curve_csv() const { return root + "/low_level_curve.csv"; }
  std::string episode_jsonl(const std::string& id, const std::string& mode) const {
    return song_dir(id) + "/play_" + mode + ".jsonl";
  }
  std::string metrics_json(const std::string& id, const std::string& mode) const {
    return song_dir(id) + "/metrics_" + mode + ".json";
  }
  std::string roll_svg(const std::string& id, const std::string& mode) const {
    return song_dir(id) + "/roll_" + mode + ".svg";
  }
  std::string report_csv() const { return root + "/report.csv"; }
};

// Joint trajectory CSV: one row per frame, `t` column then one column per
// configuration entry.
void write_joint_csv(const std::string& path, const std::vector<Eigen::VectorXd>& q,
                     double rate_hz);
std::vector<Eigen::VectorXd> read_joint_csv(const std::string& path);

HandModelSpec load_hand_spec(const PipelineConfig& cfg);

struct IngestOutcome {
  std::size_t notes = 0;
  std::size_t frames = 0;
  std::size_t ignored_notes = 0;
};
IngestOutcome run_ingest(const std::string& midi_path, const std::string& out_csv,
                         const std::string& out_json, double rate_hz, int tail_frames);

struct RetargetOutcome {
  bool used_homography = false;
  double homography_error = 0.0;  // mean reprojection error, plane units
  std::size_t frames = 0;
  std::size_t unserved_keys = 0;
};
// corr_csv may be empty; then tips_csv must already contain keyboard-space
// coordinates with z. With correspondences, tips_csv holds pixel tracks, a
// homography is estimated, and heights are assigned from the press
// assignments after alignment.
RetargetOutcome run_retarget(const std::string& tips_csv, const std::string& corr_csv,
                             const std::string& traj_csv, const std::string& out_csv);

struct TrackOutcome {
  std::size_t frames = 0;
  double max_tip_error = 0.0;
  double final_kkt_residual = 0.0;
};
TrackOutcome run_ik_track(const HandModelSpec& spec, const IkParams& ik,
                          const std::string& aligned_csv, const std::string& traj_csv,
                          const std::string& out_csv);

// Loads one song's processed files back into memory.
SongData load_song_data(const std::string& id, const RunLayout& run);

struct TrainSongOutcome {
  double nominal_return = 0.0;  // zero-residual baseline
  double best_return = 0.0;
};
TrainSongOutcome run_train_song(const PipelineConfig& cfg, const HandModelSpec& spec,
                                const KeyGeometry& geom, const std::string& id,
                                const RunLayout& run);

struct TrainCodecOutcome {
  std::size_t states = 0;
  double final_loss = 0.0;
};
TrainCodecOutcome run_train_codec(const PipelineConfig& cfg, const KeyGeometry& geom,
                                  const std::vector<std::string>& ids, const RunLayout& run);

struct DistillBuildOutcome {
  std::size_t songs = 0;
  std::size_t frames = 0;
};
DistillBuildOutcome run_distill_build(const PipelineConfig& cfg, const HandModelSpec& spec,
                                      const KeyGeometry& geom,
                                      const std::vector<std::string>& ids, const RunLayout& run);

struct DistillTrainOutcome {
  double hl_final_loss = 0.0;
  double ll_final_loss = 0.0;
};
DistillTrainOutcome run_distill_train(const PipelineConfig& cfg, const HandModelSpec& spec,
                                      const RunLayout& run);

// Playback modes: nominal IK targets only, expert residual policy,
// hierarchical policy, and hierarchical low level driven by the
// demonstration fingertips instead of the high level.
enum class PlayMode { nominal, expert, hierarchical, oracle_goal };
const char* play_mode_name(PlayMode mode);

struct PlayOutcome {
  double total_reward = 0.0;
  Metrics metrics;
};
PlayOutcome run_play(const PipelineConfig& cfg, const HandModelSpec& spec,
                     const KeyGeometry& geom, const std::string& id, PlayMode mode,
                     const RunLayout& run);

Metrics run_eval(const std::string& episode_jsonl, const std::string& traj_csv,
                 const std::string& out_json);

struct ReportRow {
  std::string id;
  std::string mode;
  double total_reward = 0.0;
  Metrics metrics;
};
// Collects per-song metrics for every mode that was played, writes the
// summary CSV and a piano-roll SVG per episode, and returns the rows.
std::vector<ReportRow> run_report(const std::vector<std::string>& ids, const RunLayout& run);

// Piano roll of goal vs played key presses.
void write_roll_svg(const std::string& path, const PianoStateTrajectory& goal,
                    const PianoStateTrajectory& played);

}  // namespace pianomime
