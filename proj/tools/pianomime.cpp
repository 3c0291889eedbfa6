// Command-line front end: each subcommand wraps one pipeline stage so that
// stages can be composed file-in/file-out, either with explicit paths or via
// the corpus/run directory layout.
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pianomime/config.hpp"
#include "pianomime/pipeline.hpp"

namespace {

using nlohmann::json;
using namespace pianomime;

std::vector<std::string> resolve_songs(const std::vector<std::string>& cli_songs,
                                       const std::string& corpus_dir,
                                       const std::vector<std::string>& fallback) {
  if (!cli_songs.empty()) return cli_songs;
  if (!corpus_dir.empty()) return CorpusLayout{corpus_dir}.ids();
  if (!fallback.empty()) return fallback;
  throw std::runtime_error("no songs given: pass --songs, --corpus, or list them in the config");
}

void emit(const json& j) { std::cout << j.dump() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"piano performance pipeline: MIDI to hierarchical piano-playing policies"};
  app.require_subcommand(1);
  app.fallthrough(true);

  std::string config_path;
  app.add_option("--config", config_path, "pipeline config JSON (defaults used when omitted)");
  std::uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "override every stage seed");
  int jobs_val = 1;
  auto* jobs_opt = app.add_option("--jobs", jobs_val, "override worker thread count");

  // Subcommand callbacks run once the whole command line is parsed, so option
  // counts are final by the time this is called.
  auto load_cfg = [&]() {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{}
                                             : PipelineConfig::from_json_file(config_path);
    if (seed_opt->count() > 0) cfg.override_seed(seed_val);
    if (jobs_opt->count() > 0) cfg.override_jobs(jobs_val);
    cfg.validate();
    return cfg;
  };

  // Shared path options; each subcommand wires the subset it needs.
  std::string run_dir, corpus_dir, song_id;
  std::vector<std::string> songs;

  auto add_run = [&](CLI::App* sub, bool required = true) {
    auto* o = sub->add_option("--run", run_dir, "run directory for pipeline artifacts");
    if (required) o->required();
  };
  auto add_corpus = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus_dir, "corpus directory (song.mid, demo_pixel.csv, ...)");
  };
  auto add_song = [&](CLI::App* sub) {
    sub->add_option("--song", song_id, "song id")->required();
  };
  auto add_songs = [&](CLI::App* sub) {
    sub->add_option("--songs", songs, "comma-separated song ids")->delimiter(',');
  };

  // --- ingest ---------------------------------------------------------------
  std::string midi_path, out_csv, out_json_path;
  auto* ingest = app.add_subcommand("ingest", "MIDI file -> discretized key/pedal trajectory");
  ingest->add_option("--midi", midi_path, "input MIDI file");
  ingest->add_option("--out-csv", out_csv, "output trajectory CSV");
  ingest->add_option("--out-json", out_json_path, "output trajectory JSON");
  add_run(ingest, false);
  add_corpus(ingest);
  ingest->add_option("--song", song_id, "song id (derives default paths)");
  ingest->callback([&] {
    PipelineConfig cfg = load_cfg();
    std::string midi = midi_path, csv = out_csv, js = out_json_path;
    if (!song_id.empty()) {
      if (midi.empty() && !corpus_dir.empty()) midi = CorpusLayout{corpus_dir}.midi(song_id);
      if (!run_dir.empty()) {
        RunLayout run{run_dir};
        if (csv.empty()) csv = run.song_csv(song_id);
        if (js.empty()) js = run.song_json(song_id);
      }
    }
    if (midi.empty()) throw std::runtime_error("ingest: need --midi or --corpus with --song");
    if (csv.empty() && js.empty())
      throw std::runtime_error("ingest: need --out-csv/--out-json or --run with --song");
    IngestOutcome out = run_ingest(midi, csv, js, cfg.rate_hz, cfg.tail_frames);
    emit({{"stage", "ingest"},
          {"notes", out.notes},
          {"frames", out.frames},
          {"ignored_notes", out.ignored_notes}});
  });

  // --- retarget ---------------------------------------------------------------
  std::string tips_csv, corr_csv, traj_csv, aligned_out;
  auto* retarget = app.add_subcommand(
      "retarget", "demonstration fingertips (pixel or plane) -> key-aligned fingertip targets");
  retarget->add_option("--tips", tips_csv, "fingertip CSV (pixel u,v with --correspondences, else x,y,z)");
  retarget->add_option("--correspondences", corr_csv, "pixel<->plane correspondences CSV");
  retarget->add_option("--traj", traj_csv, "goal trajectory CSV from ingest");
  retarget->add_option("--out", aligned_out, "output aligned fingertip CSV");
  add_run(retarget, false);
  add_corpus(retarget);
  retarget->add_option("--song", song_id, "song id (derives default paths)");
  retarget->callback([&] {
    (void)load_cfg();
    std::string tips = tips_csv, corr = corr_csv, traj = traj_csv, out_path = aligned_out;
    if (!song_id.empty()) {
      if (!corpus_dir.empty()) {
        CorpusLayout corpus{corpus_dir};
        if (tips.empty()) tips = corpus.demo_pixel_csv(song_id);
        if (corr.empty()) corr = corpus.correspondences_csv(song_id);
      }
      if (!run_dir.empty()) {
        RunLayout run{run_dir};
        if (traj.empty()) traj = run.song_csv(song_id);
        if (out_path.empty()) out_path = run.aligned_csv(song_id);
      }
    }
    if (tips.empty() || traj.empty() || out_path.empty())
      throw std::runtime_error("retarget: need --tips/--traj/--out or --corpus/--run with --song");
    RetargetOutcome out = run_retarget(tips, corr, traj, out_path);
    emit({{"stage", "retarget"},
          {"used_homography", out.used_homography},
          {"homography_error", out.homography_error},
          {"frames", out.frames},
          {"unserved_keys", out.unserved_keys}});
  });

  // --- ik-track ---------------------------------------------------------------
  std::string aligned_csv, joints_out;
  auto* ik_track = app.add_subcommand("ik-track", "aligned fingertips -> joint trajectory via QP IK");
  ik_track->add_option("--aligned", aligned_csv, "aligned fingertip CSV");
  ik_track->add_option("--traj", traj_csv, "goal trajectory CSV (pedal flags)");
  ik_track->add_option("--out", joints_out, "output joint trajectory CSV");
  add_run(ik_track, false);
  ik_track->add_option("--song", song_id, "song id (derives default paths)");
  ik_track->callback([&] {
    PipelineConfig cfg = load_cfg();
    std::string aligned = aligned_csv, traj = traj_csv, out_path = joints_out;
    if (!song_id.empty() && !run_dir.empty()) {
      RunLayout run{run_dir};
      if (aligned.empty()) aligned = run.aligned_csv(song_id);
      if (traj.empty()) traj = run.song_csv(song_id);
      if (out_path.empty()) out_path = run.nominal_csv(song_id);
    }
    if (aligned.empty() || traj.empty() || out_path.empty())
      throw std::runtime_error("ik-track: need --aligned/--traj/--out or --run with --song");
    HandModelSpec spec = load_hand_spec(cfg);
    TrackOutcome out = run_ik_track(spec, cfg.ik, aligned, traj, out_path);
    emit({{"stage", "ik-track"},
          {"frames", out.frames},
          {"max_tip_error", out.max_tip_error},
          {"final_kkt_residual", out.final_kkt_residual}});
  });

  // --- train-song ---------------------------------------------------------------
  auto* train_song = app.add_subcommand("train-song", "learn a per-song residual expert with CEM");
  add_run(train_song);
  add_song(train_song);
  train_song->callback([&] {
    PipelineConfig cfg = load_cfg();
    HandModelSpec spec = load_hand_spec(cfg);
    KeyGeometry geom = KeyGeometry::standard_piano();
    TrainSongOutcome out = run_train_song(cfg, spec, geom, song_id, RunLayout{run_dir});
    emit({{"stage", "train-song"},
          {"song", song_id},
          {"nominal_return", out.nominal_return},
          {"best_return", out.best_return}});
  });

  // --- train-codec ---------------------------------------------------------------
  auto* train_codec = app.add_subcommand("train-codec", "train the goal autoencoder on song states");
  add_run(train_codec);
  add_songs(train_codec);
  add_corpus(train_codec);
  train_codec->callback([&] {
    PipelineConfig cfg = load_cfg();
    KeyGeometry geom = KeyGeometry::standard_piano();
    auto ids = resolve_songs(songs, corpus_dir, cfg.train_songs);
    TrainCodecOutcome out = run_train_codec(cfg, geom, ids, RunLayout{run_dir});
    emit({{"stage", "train-codec"}, {"states", out.states}, {"final_loss", out.final_loss}});
  });

  // --- distill-build ---------------------------------------------------------------
  auto* distill_build =
      app.add_subcommand("distill-build", "roll out residual experts into a distillation dataset");
  add_run(distill_build);
  add_songs(distill_build);
  add_corpus(distill_build);
  distill_build->callback([&] {
    PipelineConfig cfg = load_cfg();
    HandModelSpec spec = load_hand_spec(cfg);
    KeyGeometry geom = KeyGeometry::standard_piano();
    auto ids = resolve_songs(songs, corpus_dir, cfg.train_songs);
    DistillBuildOutcome out = run_distill_build(cfg, spec, geom, ids, RunLayout{run_dir});
    emit({{"stage", "distill-build"}, {"songs", out.songs}, {"frames", out.frames}});
  });

  // --- distill-train ---------------------------------------------------------------
  auto* distill_train =
      app.add_subcommand("distill-train", "train high- and low-level policies on the dataset");
  add_run(distill_train);
  distill_train->callback([&] {
    PipelineConfig cfg = load_cfg();
    HandModelSpec spec = load_hand_spec(cfg);
    DistillTrainOutcome out = run_distill_train(cfg, spec, RunLayout{run_dir});
    emit({{"stage", "distill-train"},
          {"hl_final_loss", out.hl_final_loss},
          {"ll_final_loss", out.ll_final_loss}});
  });

  // --- play ---------------------------------------------------------------
  std::string mode_name = "hierarchical";
  auto* play = app.add_subcommand("play", "roll a policy out in the simulator and record the episode");
  add_run(play);
  add_song(play);
  play->add_option("--mode", mode_name, "nominal|expert|hierarchical|oracle-goal")
      ->check(CLI::IsMember({"nominal", "expert", "hierarchical", "oracle-goal"}));
  play->callback([&] {
    PipelineConfig cfg = load_cfg();
    HandModelSpec spec = load_hand_spec(cfg);
    KeyGeometry geom = KeyGeometry::standard_piano();
    PlayMode mode = PlayMode::hierarchical;
    if (mode_name == "nominal") mode = PlayMode::nominal;
    else if (mode_name == "expert") mode = PlayMode::expert;
    else if (mode_name == "oracle-goal") mode = PlayMode::oracle_goal;
    PlayOutcome out = run_play(cfg, spec, geom, song_id, mode, RunLayout{run_dir});
    emit({{"stage", "play"},
          {"song", song_id},
          {"mode", play_mode_name(mode)},
          {"total_reward", out.total_reward},
          {"precision", out.metrics.precision},
          {"recall", out.metrics.recall},
          {"f1", out.metrics.f1}});
  });

  // --- eval ---------------------------------------------------------------
  std::string episode_path, metrics_out;
  auto* eval = app.add_subcommand("eval", "score an episode against a goal trajectory");
  eval->add_option("--episode", episode_path, "episode JSONL from play");
  eval->add_option("--traj", traj_csv, "goal trajectory CSV");
  eval->add_option("--out", metrics_out, "optional metrics JSON output");
  add_run(eval, false);
  eval->add_option("--song", song_id, "song id (derives default paths)");
  eval->add_option("--mode", mode_name, "episode mode when using --run/--song");
  eval->callback([&] {
    (void)load_cfg();
    std::string episode = episode_path, traj = traj_csv, out_path = metrics_out;
    if (!song_id.empty() && !run_dir.empty()) {
      RunLayout run{run_dir};
      if (episode.empty()) episode = run.episode_jsonl(song_id, mode_name);
      if (traj.empty()) traj = run.song_csv(song_id);
      if (out_path.empty()) out_path = run.metrics_json(song_id, mode_name);
    }
    if (episode.empty() || traj.empty())
      throw std::runtime_error("eval: need --episode/--traj or --run with --song");
    Metrics m = run_eval(episode, traj, out_path);
    emit({{"stage", "eval"},
          {"true_positives", m.true_positives},
          {"false_positives", m.false_positives},
          {"false_negatives", m.false_negatives},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1}});
  });

  // --- report ---------------------------------------------------------------
  auto* report = app.add_subcommand("report", "aggregate per-song metrics and render piano rolls");
  add_run(report);
  add_songs(report);
  add_corpus(report);
  report->callback([&] {
    PipelineConfig cfg = load_cfg();
    std::vector<std::string> fallback = cfg.train_songs;
    fallback.insert(fallback.end(), cfg.eval_songs.begin(), cfg.eval_songs.end());
    auto ids = resolve_songs(songs, corpus_dir, fallback);
    RunLayout run{run_dir};
    auto rows = run_report(ids, run);
    emit({{"stage", "report"}, {"rows", rows.size()}, {"report_csv", run.report_csv()}});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    std::ostringstream sink;
    int code = app.exit(e, sink, sink);
    return code == 0 ? 1 : code;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "runtime"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
