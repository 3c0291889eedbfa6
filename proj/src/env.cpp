#include "pianomime/env.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pianomime {

int EnvConfig::substeps_per_frame() const {
  return static_cast<int>(std::lround(substep_hz / control_hz));
}

void EnvConfig::validate() const {
  if (control_hz <= 0 || substep_hz <= 0)
    throw std::invalid_argument("EnvConfig: rates must be positive");
  const double ratio = substep_hz / control_hz;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9 || std::lround(ratio) < 1)
    throw std::invalid_argument("EnvConfig: substep_hz must be an integer multiple of control_hz");
  if (key_travel <= 0) throw std::invalid_argument("EnvConfig: key_travel must be positive");
  if (press_threshold <= 0 || press_threshold > 1)
    throw std::invalid_argument("EnvConfig: press_threshold must be in (0, 1]");
  if (tau_track <= 0) throw std::invalid_argument("EnvConfig: tau_track must be positive");
  if (sigma_g <= 0) throw std::invalid_argument("EnvConfig: sigma_g must be positive");
  if (std::abs(w_key + w_mimic - 1.0) > 1e-12)
    throw std::invalid_argument("EnvConfig: reward weights must sum to 1");
  if (w_key < 0 || w_mimic < 0)
    throw std::invalid_argument("EnvConfig: reward weights must be nonnegative");
  if (lookahead < 0) throw std::invalid_argument("EnvConfig: lookahead must be >= 0");
}

double reward_shaping(double distance, double sigma) {
  return 1.0 - std::tanh(distance / sigma);
}

Eigen::VectorXd key_depressions(const std::array<Eigen::Vector3d, kNumFingers>& tips,
                                const KeyGeometry& geom, const EnvConfig& cfg) {
  Eigen::VectorXd ks = Eigen::VectorXd::Zero(kNumKeys);
  for (const auto& tip : tips) {
    for (int k : geom.keys_near_y(tip.y(), 0.0)) {
      const Key& key = geom.keys[static_cast<std::size_t>(k)];
      if (!key.contains_xy(tip.x(), tip.y())) continue;
      const double depth = clampd((key.top_z - tip.z()) / cfg.key_travel, 0.0, 1.0);
      ks[k] = std::max(ks[k], depth);
    }
  }
  return ks;
}

RewardBreakdown compute_reward(const Eigen::VectorXd& key_state, const PianoState& goal,
                               const std::array<Eigen::Vector3d, kNumFingers>& robot_tips,
                               const std::array<Eigen::Vector3d, kNumFingers>& demo_tips,
                               const EnvConfig& cfg) {
  RewardBreakdown r;

  double goal_err_sq = 0.0;
  for (int k = 0; k < kNumKeys; ++k) {
    if (goal.keys[static_cast<std::size_t>(k)]) {
      const double d = key_state[k] - 1.0;
      goal_err_sq += d * d;
    } else if (key_state[k] >= cfg.press_threshold) {
      r.false_positive = true;
    }
  }
  r.key_press = 0.5 * reward_shaping(std::sqrt(goal_err_sq), cfg.sigma_g) +
                0.5 * (r.false_positive ? 0.0 : 1.0);

  double mimic_sq = 0.0;
  for (int i = 0; i < kNumFingers; ++i)
    mimic_sq += (robot_tips[static_cast<std::size_t>(i)] - demo_tips[static_cast<std::size_t>(i)])
                    .squaredNorm();
  r.mimic = reward_shaping(std::sqrt(mimic_sq), cfg.sigma_g);

  r.total = cfg.w_key * r.key_press + cfg.w_mimic * r.mimic;
  return r;
}

double EpisodeLog::total_reward() const {
  double s = 0.0;
  for (const auto& f : frames) s += f.reward.total;
  return s;
}

PianoStateTrajectory EpisodeLog::pressed_trajectory() const {
  PianoStateTrajectory traj;
  traj.rate_hz = rate_hz;
  traj.frames.reserve(frames.size());
  for (const auto& f : frames) {
    PianoState s;
    for (int k = 0; k < kNumKeys; ++k)
      s.keys[static_cast<std::size_t>(k)] = f.key_state[k] >= press_threshold ? 1 : 0;
    s.pedal = f.q[f.q.size() - 1] >= 0.5 ? 1 : 0;
    traj.frames.push_back(s);
  }
  return traj;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from(const nlohmann::json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

void EpisodeLog::write_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  nlohmann::json header;
  header["type"] = "header";
  header["rate_hz"] = rate_hz;
  header["press_threshold"] = press_threshold;
  out << header.dump() << '\n';
  for (const auto& f : frames) {
    nlohmann::json j;
    j["type"] = "frame";
    j["t"] = f.t;
    j["q"] = vec_json(f.q);
    j["action"] = vec_json(f.action);
    auto& tips = j["tips"] = nlohmann::json::array();
    for (const auto& tip : f.tips) tips.push_back({tip.x(), tip.y(), tip.z()});
    j["key_state"] = vec_json(f.key_state);
    auto& on = j["goal_on"] = nlohmann::json::array();
    for (int k = 0; k < kNumKeys; ++k)
      if (f.goal.keys[static_cast<std::size_t>(k)]) on.push_back(k);
    j["goal_pedal"] = int(f.goal.pedal);
    j["reward"] = {{"key_press", f.reward.key_press},
                   {"mimic", f.reward.mimic},
                   {"total", f.reward.total},
                   {"false_positive", f.reward.false_positive}};
    out << j.dump() << '\n';
  }
}

EpisodeLog EpisodeLog::read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  EpisodeLog log;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      log.rate_hz = j.at("rate_hz").get<double>();
      log.press_threshold = j.at("press_threshold").get<double>();
      have_header = true;
    } else if (type == "frame") {
      FrameRecord f;
      f.t = j.at("t").get<int>();
      f.q = vec_from(j.at("q"));
      f.action = vec_from(j.at("action"));
      const auto& tips = j.at("tips");
      for (std::size_t i = 0; i < kNumFingers; ++i)
        f.tips[i] = Eigen::Vector3d(tips[i][0].get<double>(), tips[i][1].get<double>(),
                                    tips[i][2].get<double>());
      f.key_state = vec_from(j.at("key_state"));
      for (const auto& k : j.at("goal_on"))
        f.goal.keys[static_cast<std::size_t>(k.get<int>())] = 1;
      f.goal.pedal = j.at("goal_pedal").get<int>() ? 1 : 0;
      f.reward.key_press = j.at("reward").at("key_press").get<double>();
      f.reward.mimic = j.at("reward").at("mimic").get<double>();
      f.reward.total = j.at("reward").at("total").get<double>();
      f.reward.false_positive = j.at("reward").at("false_positive").get<bool>();
      log.frames.push_back(std::move(f));
    } else {
      throw std::runtime_error(path + ": unknown record type '" + type + "'");
    }
  }
  if (!have_header) throw std::runtime_error(path + ": missing header record");
  return log;
}

int Observation::flat_size(int dof, int lookahead) {
  return dof + dof + 1 + kNumKeys + lookahead * (kNumKeys + 1) + 3 * kNumFingers + dof + 1;
}

Eigen::VectorXd Observation::flatten() const {
  const int dof = static_cast<int>(q.size());
  Eigen::VectorXd v(flat_size(dof, static_cast<int>(goals.size())));
  Eigen::Index at = 0;
  v.segment(at, dof) = q;
  at += dof;
  v.segment(at, dof) = qdot;
  at += dof;
  v[at++] = pedal;
  v.segment(at, kNumKeys) = key_state;
  at += kNumKeys;
  for (const auto& g : goals) {
    for (int k = 0; k < kNumKeys; ++k) v[at++] = g.keys[static_cast<std::size_t>(k)];
    v[at++] = g.pedal;
  }
  for (const auto& tip : demo_tips) {
    v[at++] = tip.x();
    v[at++] = tip.y();
    v[at++] = tip.z();
  }
  v.segment(at, nominal_next.size()) = nominal_next;
  at += nominal_next.size();
  return v;
}

PianoEnv::PianoEnv(HandModelSpec spec, KeyGeometry geom, EnvConfig cfg)
    : spec_(std::move(spec)), geom_(std::move(geom)), cfg_(cfg) {
  cfg_.validate();
  spec_.validate();
}

Observation PianoEnv::observe() const {
  Observation obs;
  const int n = spec_.dof();
  obs.q = q_.head(n);
  obs.qdot = qdot_.head(n);
  obs.pedal = q_[n];
  obs.key_state = key_state_;
  // The window covers the upcoming frames t .. t+L-1; frame t is the one the
  // next step will be judged against.
  obs.goals = goal_window(song_, static_cast<long>(t_) - 1, cfg_.lookahead);
  obs.demo_tips = t_ < static_cast<int>(demo_.size()) ? demo_[static_cast<std::size_t>(t_)].tips
                                                      : demo_.back().tips;
  obs.nominal_next = t_ < static_cast<int>(nominal_.size())
                         ? nominal_[static_cast<std::size_t>(t_)]
                         : nominal_.back();
  return obs;
}

Observation PianoEnv::reset(const PianoStateTrajectory& song, std::vector<FingertipFrame> demo,
                            std::vector<Eigen::VectorXd> nominal) {
  if (song.frames.empty()) throw std::invalid_argument("PianoEnv::reset: empty song");
  if (demo.size() != song.frames.size())
    throw std::invalid_argument("PianoEnv::reset: demo frame count mismatch");
  if (nominal.size() != song.frames.size())
    throw std::invalid_argument("PianoEnv::reset: nominal frame count mismatch");
  for (const auto& a : nominal) {
    if (a.size() != spec_.total_dof())
      throw std::invalid_argument("PianoEnv::reset: nominal action size mismatch");
  }

  song_ = song;
  demo_ = std::move(demo);
  nominal_ = std::move(nominal);

  q_ = spec_.clamp(nominal_[0]);
  reset_clamped_ = (q_ - nominal_[0]).cwiseAbs().maxCoeff() > 0.0;
  qdot_ = Eigen::VectorXd::Zero(spec_.total_dof());
  // Keys start at rest regardless of the initial pose.
  key_state_ = Eigen::VectorXd::Zero(kNumKeys);
  t_ = 0;
  done_ = false;
  log_ = EpisodeLog{};
  log_.rate_hz = cfg_.control_hz;
  log_.press_threshold = cfg_.press_threshold;
  return observe();
}

PianoEnv::StepResult PianoEnv::step(const Eigen::VectorXd& action) {
  if (done_) throw std::logic_error("PianoEnv::step called on a finished episode");
  if (action.size() != spec_.total_dof())
    throw std::invalid_argument("PianoEnv::step: action size mismatch");

  const Eigen::VectorXd target = spec_.clamp(action);
  const Eigen::VectorXd q_start = q_;

  const int n_sub = cfg_.substeps_per_frame();
  const double dt_sub = 1.0 / cfg_.substep_hz;
  // First-order tracking toward the target; alpha capped at 1 so very small
  // time constants mean instantaneous tracking rather than overshoot.
  const double alpha = std::min(1.0, dt_sub / cfg_.tau_track);
  for (int s = 0; s < n_sub; ++s) q_ += alpha * (target - q_);
  q_ = spec_.clamp(q_);
  qdot_ = (q_ - q_start) * cfg_.control_hz;

  const auto tips = forward_kinematics(spec_, q_);
  key_state_ = key_depressions(tips, geom_, cfg_);

  const PianoState& goal = song_.frames[static_cast<std::size_t>(t_)];
  const RewardBreakdown reward =
      compute_reward(key_state_, goal, tips, demo_[static_cast<std::size_t>(t_)].tips, cfg_);

  FrameRecord rec;
  rec.t = t_;
  rec.q = q_;
  rec.action = target;
  rec.tips = tips;
  rec.key_state = key_state_;
  rec.goal = goal;
  rec.reward = reward;
  log_.frames.push_back(std::move(rec));

  ++t_;
  done_ = t_ >= frame_count();

  StepResult out;
  out.obs = observe();
  out.reward = reward;
  out.done = done_;
  return out;
}

}  // namespace pianomime
