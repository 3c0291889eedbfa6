#include "pianomime/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pianomime/midi.hpp"

namespace pianomime {
namespace {

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

void write_train_curve_csv(const std::string& path, const std::vector<TrainPoint>& curve) {
  ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "epoch,loss\n";
  char buf[64];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%d,%.12g\n", p.epoch, p.loss);
    out << buf;
  }
}

}  // namespace

std::vector<std::string> CorpusLayout::ids() const {
  std::ifstream in(manifest());
  if (!in) throw std::runtime_error("cannot open: " + manifest());
  nlohmann::json j;
  in >> j;
  return j.at("songs").get<std::vector<std::string>>();
}

void CorpusLayout::write_manifest(const std::vector<std::string>& song_ids) const {
  std::filesystem::create_directories(root);
  nlohmann::json j;
  j["songs"] = song_ids;
  std::ofstream out(manifest());
  if (!out) throw std::runtime_error("cannot open for writing: " + manifest());
  out << j.dump(2) << '\n';
}

void write_joint_csv(const std::string& path, const std::vector<Eigen::VectorXd>& q,
                     double rate_hz) {
  ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  char buf[64];
  std::snprintf(buf, sizeof buf, "# rate_hz=%.6f\n", rate_hz);
  out << buf;
  for (std::size_t t = 0; t < q.size(); ++t) {
    std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(t) / rate_hz);
    out << buf;
    for (Eigen::Index i = 0; i < q[t].size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", q[t][i]);
      out << buf;
    }
    out << '\n';
  }
}

std::vector<Eigen::VectorXd> read_joint_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double t;
    if (!(ss >> t))
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected a time value");
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (vals.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": row has no joint values");
    if (!rows.empty() && static_cast<std::size_t>(rows.front().size()) != vals.size())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": inconsistent row width");
    rows.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return rows;
}

HandModelSpec load_hand_spec(const PipelineConfig& cfg) {
  if (cfg.hand_spec_path.empty()) return HandModelSpec::default_spec();
  return HandModelSpec::from_json_file(cfg.hand_spec_path);
}

IngestOutcome run_ingest(const std::string& midi_path, const std::string& out_csv,
                         const std::string& out_json, double rate_hz, int tail_frames) {
  const MidiData midi = parse_midi_file(midi_path);
  const PianoStateTrajectory traj = discretize(midi.events, midi.pedal, rate_hz, tail_frames);
  if (!out_csv.empty()) {
    ensure_parent_dir(out_csv);
    write_trajectory_csv(out_csv, traj);
  }
  if (!out_json.empty()) {
    ensure_parent_dir(out_json);
    write_trajectory_json(out_json, traj);
  }
  return {midi.events.size(), traj.frames.size(), static_cast<std::size_t>(midi.ignored_notes)};
}

RetargetOutcome run_retarget(const std::string& tips_csv, const std::string& corr_csv,
                             const std::string& traj_csv, const std::string& out_csv) {
  const KeyGeometry geom = KeyGeometry::standard_piano();
  const PianoStateTrajectory traj = read_trajectory_csv(traj_csv);

  RetargetOutcome outcome;
  std::vector<FingertipFrame> frames;
  if (!corr_csv.empty()) {
    const auto corr = read_correspondences_csv(corr_csv);
    const HomographyEstimate est = estimate_homography(corr);
    outcome.used_homography = true;
    outcome.homography_error = est.mean_reprojection_error;
    frames = apply_homography_frames(read_fingertips_csv(tips_csv, /*has_z=*/false), est.map);
  } else {
    frames = read_fingertips_csv(tips_csv, /*has_z=*/true);
  }

  AlignResult aligned = align_fingertips(frames, traj, geom);
  if (outcome.used_homography) aligned.frames = assign_z(aligned.frames, geom);
  outcome.frames = aligned.frames.size();
  outcome.unserved_keys = aligned.unserved.size();

  ensure_parent_dir(out_csv);
  write_fingertips_csv(out_csv, aligned.frames, /*with_z=*/true);
  return outcome;
}

TrackOutcome run_ik_track(const HandModelSpec& spec, const IkParams& ik,
                          const std::string& aligned_csv, const std::string& traj_csv,
                          const std::string& out_csv) {
  const auto frames = read_fingertips_csv(aligned_csv, /*has_z=*/true);
  const PianoStateTrajectory traj = read_trajectory_csv(traj_csv);
  std::vector<std::uint8_t> pedal(traj.frames.size());
  for (std::size_t i = 0; i < pedal.size(); ++i) pedal[i] = traj.frames[i].pedal;

  const TrackResult result = track_trajectory(spec, spec.home(), frames, ik, pedal);
  ensure_parent_dir(out_csv);
  write_joint_csv(out_csv, result.q, traj.rate_hz);

  TrackOutcome outcome;
  outcome.frames = result.q.size();
  for (const auto& info : result.info)
    outcome.max_tip_error = std::max(outcome.max_tip_error, info.max_tip_error);
  if (!result.info.empty()) outcome.final_kkt_residual = result.info.back().kkt_residual;
  return outcome;
}

SongData load_song_data(const std::string& id, const RunLayout& run) {
  SongData sd;
  sd.id = id;
  sd.song = read_trajectory_csv(run.song_csv(id));
  sd.demo = read_fingertips_csv(run.aligned_csv(id), /*has_z=*/true);
  sd.nominal = read_joint_csv(run.nominal_csv(id));
  return sd;
}

TrainSongOutcome run_train_song(const PipelineConfig& cfg, const HandModelSpec& spec,
                                const KeyGeometry& geom, const std::string& id,
                                const RunLayout& run) {
  const SongData sd = load_song_data(id, run);
  const EnvBundle bundle = sd.bundle(spec, geom, cfg.env);

  TrainSongOutcome outcome;
  outcome.nominal_return = rollout_residual(bundle, ResidualPolicy::zeros(cfg.feat)).total_reward();
  const ResidualTrainResult result = train_residual_cem(bundle, cfg.feat, cfg.cem);
  outcome.best_return = result.best_return;

  std::filesystem::create_directories(run.song_dir(id));
  result.policy.save_json(run.expert_json(id));
  save_cem_curve_csv(run.expert_curve_csv(id), result.curve);
  return outcome;
}

TrainCodecOutcome run_train_codec(const PipelineConfig& cfg, const KeyGeometry& geom,
                                  const std::vector<std::string>& ids, const RunLayout& run) {
  // Unique goal states across the corpus; duplicates add nothing but epoch
  // cost.
  std::vector<PianoState> states;
  for (const auto& id : ids) {
    const PianoStateTrajectory traj = read_trajectory_csv(run.song_csv(id));
    for (const auto& f : traj.frames)
      if (std::find(states.begin(), states.end(), f) == states.end()) states.push_back(f);
  }

  GoalCodec codec(cfg.codec, geom);
  const auto curve = train_goal_codec(codec, states, geom);

  std::filesystem::create_directories(run.root);
  codec.save_json(run.codec_json());
  {
    std::ofstream out(run.codec_curve_csv());
    if (!out) throw std::runtime_error("cannot open for writing: " + run.codec_curve_csv());
    out << "epoch,loss\n";
    char buf[64];
    for (const auto& p : curve) {
      std::snprintf(buf, sizeof buf, "%d,%.12g\n", p.epoch, p.loss);
      out << buf;
    }
  }

  TrainCodecOutcome outcome;
  outcome.states = states.size();
  if (!curve.empty()) outcome.final_loss = curve.back().loss;
  return outcome;
}

DistillBuildOutcome run_distill_build(const PipelineConfig& cfg, const HandModelSpec& spec,
                                      const KeyGeometry& geom,
                                      const std::vector<std::string>& ids, const RunLayout& run) {
  std::vector<SongData> songs;
  std::vector<ResidualPolicy> experts;
  for (const auto& id : ids) {
    songs.push_back(load_song_data(id, run));
    experts.push_back(ResidualPolicy::load_json(run.expert_json(id)));
  }

  const DistillDataset ds = build_dataset(songs, experts, spec, geom, cfg.env, cfg.cem.jobs);
  ds.save_dir(run.dataset_dir());

  DistillBuildOutcome outcome;
  outcome.songs = ds.songs.size();
  for (const auto& s : ds.songs) outcome.frames += s.frames();
  return outcome;
}

DistillTrainOutcome run_distill_train(const PipelineConfig& cfg, const HandModelSpec& spec,
                                      const RunLayout& run) {
  const DistillDataset ds = DistillDataset::load_dir(run.dataset_dir());
  const GoalCodec codec = GoalCodec::load_json(run.codec_json());

  std::vector<const DistillEntry*> songs;
  for (const auto& s : ds.songs) songs.push_back(&s);

  const HighLevelTrainResult hl = train_high_level(songs, codec, cfg.hl);
  const LowLevelTrainResult ll = train_low_level(songs, codec, cfg.ll, spec, cfg.ik);

  hl.policy.save_json(run.hl_json());
  ll.policy.save_json(run.ll_json());
  write_train_curve_csv(run.hl_curve_csv(), hl.curve);
  write_train_curve_csv(run.ll_curve_csv(), ll.curve);

  DistillTrainOutcome outcome;
  if (!hl.curve.empty()) outcome.hl_final_loss = hl.curve.back().loss;
  if (!ll.curve.empty()) outcome.ll_final_loss = ll.curve.back().loss;
  return outcome;
}

const char* play_mode_name(PlayMode mode) {
  switch (mode) {
    case PlayMode::nominal: return "nominal";
    case PlayMode::expert: return "expert";
    case PlayMode::hierarchical: return "hierarchical";
    case PlayMode::oracle_goal: return "oracle_goal";
  }
  return "unknown";
}

PlayOutcome run_play(const PipelineConfig& cfg, const HandModelSpec& spec,
                     const KeyGeometry& geom, const std::string& id, PlayMode mode,
                     const RunLayout& run) {
  const SongData sd = load_song_data(id, run);
  const EnvBundle bundle = sd.bundle(spec, geom, cfg.env);

  EpisodeLog log;
  switch (mode) {
    case PlayMode::nominal:
      log = rollout_residual(bundle, ResidualPolicy::zeros(cfg.feat));
      break;
    case PlayMode::expert:
      log = rollout_residual(bundle, ResidualPolicy::load_json(run.expert_json(id)));
      break;
    case PlayMode::hierarchical: {
      const HighLevelPolicy hl = HighLevelPolicy::load_json(run.hl_json());
      const LowLevelPolicy ll = LowLevelPolicy::load_json(run.ll_json());
      const GoalCodec codec = GoalCodec::load_json(run.codec_json());
      log = chunked_execute(bundle, &hl, ll, codec, cfg.ik, /*oracle_hl=*/false);
      break;
    }
    case PlayMode::oracle_goal: {
      const LowLevelPolicy ll = LowLevelPolicy::load_json(run.ll_json());
      const GoalCodec codec = GoalCodec::load_json(run.codec_json());
      log = chunked_execute(bundle, nullptr, ll, codec, cfg.ik, /*oracle_hl=*/true);
      break;
    }
  }

  const std::string mode_name = play_mode_name(mode);
  std::filesystem::create_directories(run.song_dir(id));
  log.write_jsonl(run.episode_jsonl(id, mode_name));

  PlayOutcome outcome;
  outcome.total_reward = log.total_reward();
  outcome.metrics = compute_metrics(log.pressed_trajectory(), sd.song);
  write_metrics_json(run.metrics_json(id, mode_name), outcome.metrics);
  return outcome;
}

Metrics run_eval(const std::string& episode_jsonl, const std::string& traj_csv,
                 const std::string& out_json) {
  const EpisodeLog log = EpisodeLog::read_jsonl(episode_jsonl);
  const PianoStateTrajectory goal = read_trajectory_csv(traj_csv);
  const Metrics m = compute_metrics(log.pressed_trajectory(), goal);
  if (!out_json.empty()) {
    ensure_parent_dir(out_json);
    write_metrics_json(out_json, m);
  }
  return m;
}

std::vector<ReportRow> run_report(const std::vector<std::string>& ids, const RunLayout& run) {
  static const PlayMode kModes[] = {PlayMode::nominal, PlayMode::expert, PlayMode::hierarchical,
                                    PlayMode::oracle_goal};
  std::vector<ReportRow> rows;
  for (const auto& id : ids) {
    const PianoStateTrajectory goal = read_trajectory_csv(run.song_csv(id));
    for (PlayMode mode : kModes) {
      const std::string mode_name = play_mode_name(mode);
      const std::string episode = run.episode_jsonl(id, mode_name);
      if (!std::filesystem::exists(episode)) continue;
      const EpisodeLog log = EpisodeLog::read_jsonl(episode);
      ReportRow row;
      row.id = id;
      row.mode = mode_name;
      row.total_reward = log.total_reward();
      row.metrics = compute_metrics(log.pressed_trajectory(), goal);
      rows.push_back(row);
      write_roll_svg(run.roll_svg(id, mode_name), goal, log.pressed_trajectory());
    }
  }

  ensure_parent_dir(run.report_csv());
  std::ofstream out(run.report_csv());
  if (!out) throw std::runtime_error("cannot open for writing: " + run.report_csv());
  out << "song,mode,total_reward,true_positives,false_positives,false_negatives,precision,recall,"
         "f1\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%ld,%ld,%ld,%.6f,%.6f,%.6f\n", r.id.c_str(),
                  r.mode.c_str(), r.total_reward, r.metrics.true_positives,
                  r.metrics.false_positives, r.metrics.false_negatives, r.metrics.precision,
                  r.metrics.recall, r.metrics.f1);
    out << buf;
  }
  return rows;
}

void write_roll_svg(const std::string& path, const PianoStateTrajectory& goal,
                    const PianoStateTrajectory& played) {
  if (goal.frames.size() != played.frames.size())
    throw std::invalid_argument("roll svg: trajectories must have equal frame counts");
  const int T = static_cast<int>(goal.frames.size());
  const int cw = 6, ch = 4, margin = 10;
  const int width = 2 * margin + cw * std::max(T, 1);
  const int height = 2 * margin + ch * kNumKeys;

  ensure_parent_dir(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < kNumKeys; ++k) {
      const bool g = goal.frames[static_cast<std::size_t>(t)].keys[static_cast<std::size_t>(k)];
      const bool p = played.frames[static_cast<std::size_t>(t)].keys[static_cast<std::size_t>(k)];
      if (!g && !p) continue;
      // Hit: green. Miss (goal only): amber. Spurious (played only): red.
      const char* fill = g && p ? "#4caf50" : (g ? "#ffb300" : "#e53935");
      const int x = margin + t * cw;
      const int y = margin + (kNumKeys - 1 - k) * ch;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch
          << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace pianomime
