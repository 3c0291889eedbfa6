#include "pianomime/config.hpp"

#include <fstream>
#include <initializer_list>

namespace pianomime {
namespace {

void check_keys(const nlohmann::json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(ctx + ": unknown field '" + it.key() + "'");
  }
}

template <class T>
void read_field(const nlohmann::json& j, const std::string& ctx, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(ctx + "." + key + ": wrong type");
  }
}

}  // namespace

void PipelineConfig::override_seed(std::uint64_t seed) {
  cem.seed = seed;
  codec.seed = seed;
  hl.seed = seed;
  ll.seed = seed;
}

void PipelineConfig::override_jobs(int jobs) {
  cem.jobs = jobs;
  codec.jobs = jobs;
  hl.jobs = jobs;
  ll.jobs = jobs;
}

void PipelineConfig::validate() const {
  if (rate_hz <= 0.0) throw ConfigError("rate_hz must be positive");
  if (tail_frames < 0) throw ConfigError("tail_frames must be >= 0");
  env.validate();
  codec.validate();
  if (cem.population < 2 || cem.elites < 1 || cem.elites > cem.population)
    throw ConfigError("cem: need population >= 2 and 1 <= elites <= population");
  if (cem.iterations < 1) throw ConfigError("cem.iterations must be >= 1");
  if (feat.n_basis < 1) throw ConfigError("residual.n_basis must be >= 1");
  if (hl.goal_horizon < 1 || hl.pred_horizon < 1)
    throw ConfigError("high_level horizons must be >= 1");
  if (ll.horizon != hl.pred_horizon)
    throw ConfigError("low_level.horizon must equal high_level.pred_horizon");
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  check_keys(j, "config",
             {"rate_hz", "tail_frames", "hand_spec", "env", "ik", "cem", "residual", "codec",
              "high_level", "low_level", "train_songs", "eval_songs"});
  read_field(j, "config", "rate_hz", c.rate_hz);
  read_field(j, "config", "tail_frames", c.tail_frames);
  read_field(j, "config", "hand_spec", c.hand_spec_path);
  read_field(j, "config", "train_songs", c.train_songs);
  read_field(j, "config", "eval_songs", c.eval_songs);

  if (j.contains("env")) {
    const auto& e = j.at("env");
    check_keys(e, "env",
               {"control_hz", "substep_hz", "key_travel", "press_threshold", "tau_track",
                "sigma_g", "w_key", "w_mimic", "lookahead"});
    read_field(e, "env", "control_hz", c.env.control_hz);
    read_field(e, "env", "substep_hz", c.env.substep_hz);
    read_field(e, "env", "key_travel", c.env.key_travel);
    read_field(e, "env", "press_threshold", c.env.press_threshold);
    read_field(e, "env", "tau_track", c.env.tau_track);
    read_field(e, "env", "sigma_g", c.env.sigma_g);
    read_field(e, "env", "w_key", c.env.w_key);
    read_field(e, "env", "w_mimic", c.env.w_mimic);
    read_field(e, "env", "lookahead", c.env.lookahead);
  }
  if (j.contains("ik")) {
    const auto& e = j.at("ik");
    check_keys(e, "ik",
               {"gain", "limit_gain", "damping", "lm_damping", "dt", "max_inner_iters", "kkt_tol",
                "iters_per_frame", "first_frame_iters"});
    read_field(e, "ik", "gain", c.ik.gain);
    read_field(e, "ik", "limit_gain", c.ik.limit_gain);
    read_field(e, "ik", "damping", c.ik.damping);
    read_field(e, "ik", "lm_damping", c.ik.lm_damping);
    read_field(e, "ik", "dt", c.ik.dt);
    read_field(e, "ik", "max_inner_iters", c.ik.max_inner_iters);
    read_field(e, "ik", "kkt_tol", c.ik.kkt_tol);
    read_field(e, "ik", "iters_per_frame", c.ik.iters_per_frame);
    read_field(e, "ik", "first_frame_iters", c.ik.first_frame_iters);
  }
  if (j.contains("cem")) {
    const auto& e = j.at("cem");
    check_keys(e, "cem",
               {"population", "elites", "iterations", "init_std", "std_floor", "seed", "jobs"});
    read_field(e, "cem", "population", c.cem.population);
    read_field(e, "cem", "elites", c.cem.elites);
    read_field(e, "cem", "iterations", c.cem.iterations);
    read_field(e, "cem", "init_std", c.cem.init_std);
    read_field(e, "cem", "std_floor", c.cem.std_floor);
    read_field(e, "cem", "seed", c.cem.seed);
    read_field(e, "cem", "jobs", c.cem.jobs);
  }
  if (j.contains("residual")) {
    const auto& e = j.at("residual");
    check_keys(e, "residual", {"n_basis", "width_scale"});
    read_field(e, "residual", "n_basis", c.feat.n_basis);
    read_field(e, "residual", "width_scale", c.feat.width_scale);
  }
  if (j.contains("codec")) {
    const auto& e = j.at("codec");
    check_keys(e, "codec",
               {"encoder_widths", "decoder_hidden", "n_freq", "d_empty", "bbox_inflation", "lr",
                "epochs", "queries_per_state", "batch", "seed", "jobs"});
    read_field(e, "codec", "encoder_widths", c.codec.encoder_widths);
    read_field(e, "codec", "decoder_hidden", c.codec.decoder_hidden);
    read_field(e, "codec", "n_freq", c.codec.n_freq);
    read_field(e, "codec", "d_empty", c.codec.d_empty);
    read_field(e, "codec", "bbox_inflation", c.codec.bbox_inflation);
    read_field(e, "codec", "lr", c.codec.lr);
    read_field(e, "codec", "epochs", c.codec.epochs);
    read_field(e, "codec", "queries_per_state", c.codec.queries_per_state);
    read_field(e, "codec", "batch", c.codec.batch);
    read_field(e, "codec", "seed", c.codec.seed);
    read_field(e, "codec", "jobs", c.codec.jobs);
  }
  if (j.contains("high_level")) {
    const auto& e = j.at("high_level");
    check_keys(e, "high_level",
               {"goal_horizon", "pred_horizon", "hidden", "lr", "epochs", "batch", "noise_std",
                "seed", "jobs"});
    read_field(e, "high_level", "goal_horizon", c.hl.goal_horizon);
    read_field(e, "high_level", "pred_horizon", c.hl.pred_horizon);
    read_field(e, "high_level", "hidden", c.hl.hidden);
    read_field(e, "high_level", "lr", c.hl.lr);
    read_field(e, "high_level", "epochs", c.hl.epochs);
    read_field(e, "high_level", "batch", c.hl.batch);
    read_field(e, "high_level", "noise_std", c.hl.noise_std);
    read_field(e, "high_level", "seed", c.hl.seed);
    read_field(e, "high_level", "jobs", c.hl.jobs);
  }
  if (j.contains("low_level")) {
    const auto& e = j.at("low_level");
    check_keys(e, "low_level", {"horizon", "hidden", "lr", "epochs", "batch", "mode", "seed", "jobs"});
    read_field(e, "low_level", "horizon", c.ll.horizon);
    read_field(e, "low_level", "hidden", c.ll.hidden);
    read_field(e, "low_level", "lr", c.ll.lr);
    read_field(e, "low_level", "epochs", c.ll.epochs);
    read_field(e, "low_level", "batch", c.ll.batch);
    if (e.contains("mode")) {
      std::string mode;
      read_field(e, "low_level", "mode", mode);
      if (mode == "direct") c.ll.mode = LowLevelMode::direct;
      else if (mode == "residual") c.ll.mode = LowLevelMode::residual;
      else throw ConfigError("low_level.mode: expected 'direct' or 'residual'");
    }
    read_field(e, "low_level", "seed", c.ll.seed);
    read_field(e, "low_level", "jobs", c.ll.jobs);
  }

  c.validate();
  return c;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j;
  j["rate_hz"] = rate_hz;
  j["tail_frames"] = tail_frames;
  if (!hand_spec_path.empty()) j["hand_spec"] = hand_spec_path;
  j["train_songs"] = train_songs;
  j["eval_songs"] = eval_songs;
  j["env"] = {{"control_hz", env.control_hz},
              {"substep_hz", env.substep_hz},
              {"key_travel", env.key_travel},
              {"press_threshold", env.press_threshold},
              {"tau_track", env.tau_track},
              {"sigma_g", env.sigma_g},
              {"w_key", env.w_key},
              {"w_mimic", env.w_mimic},
              {"lookahead", env.lookahead}};
  j["ik"] = {{"gain", ik.gain},
             {"limit_gain", ik.limit_gain},
             {"damping", ik.damping},
             {"lm_damping", ik.lm_damping},
             {"dt", ik.dt},
             {"max_inner_iters", ik.max_inner_iters},
             {"kkt_tol", ik.kkt_tol},
             {"iters_per_frame", ik.iters_per_frame},
             {"first_frame_iters", ik.first_frame_iters}};
  j["cem"] = {{"population", cem.population}, {"elites", cem.elites},
              {"iterations", cem.iterations}, {"init_std", cem.init_std},
              {"std_floor", cem.std_floor},   {"seed", cem.seed},
              {"jobs", cem.jobs}};
  j["residual"] = {{"n_basis", feat.n_basis}, {"width_scale", feat.width_scale}};
  j["codec"] = {{"encoder_widths", codec.encoder_widths},
                {"decoder_hidden", codec.decoder_hidden},
                {"n_freq", codec.n_freq},
                {"d_empty", codec.d_empty},
                {"bbox_inflation", codec.bbox_inflation},
                {"lr", codec.lr},
                {"epochs", codec.epochs},
                {"queries_per_state", codec.queries_per_state},
                {"batch", codec.batch},
                {"seed", codec.seed},
                {"jobs", codec.jobs}};
  j["high_level"] = {{"goal_horizon", hl.goal_horizon}, {"pred_horizon", hl.pred_horizon},
                     {"hidden", hl.hidden},             {"lr", hl.lr},
                     {"epochs", hl.epochs},             {"batch", hl.batch},
                     {"noise_std", hl.noise_std},       {"seed", hl.seed},
                     {"jobs", hl.jobs}};
  j["low_level"] = {{"horizon", ll.horizon},
                    {"hidden", ll.hidden},
                    {"lr", ll.lr},
                    {"epochs", ll.epochs},
                    {"batch", ll.batch},
                    {"mode", ll.mode == LowLevelMode::residual ? "residual" : "direct"},
                    {"seed", ll.seed},
                    {"jobs", ll.jobs}};
  return j;
}

}  // namespace pianomime
