#include "pianomime/distill.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "pianomime/parallel.hpp"

namespace pianomime {
namespace {

constexpr std::size_t kGradBlocks = 16;

Eigen::VectorXd flatten_tips(const std::array<Eigen::Vector3d, kNumFingers>& tips) {
  Eigen::VectorXd v(3 * kNumFingers);
  for (int i = 0; i < kNumFingers; ++i) v.segment(3 * i, 3) = tips[static_cast<std::size_t>(i)];
  return v;
}

std::array<Eigen::Vector3d, kNumFingers> unflatten_tips(const Eigen::VectorXd& v, int offset) {
  std::array<Eigen::Vector3d, kNumFingers> tips;
  for (int i = 0; i < kNumFingers; ++i) tips[static_cast<std::size_t>(i)] = v.segment(offset + 3 * i, 3);
  return tips;
}

// Latent goal vectors for every frame of a song plus the all-keys-up state
// used to pad past the end.
struct SongLatents {
  std::vector<Eigen::VectorXd> frames;
  Eigen::VectorXd empty;

  const Eigen::VectorXd& at(long t) const {
    if (t >= 0 && t < static_cast<long>(frames.size())) return frames[static_cast<std::size_t>(t)];
    return empty;
  }
};

SongLatents encode_song(const GoalCodec& codec, const PianoStateTrajectory& song) {
  SongLatents lat;
  lat.frames.reserve(song.frames.size());
  for (const auto& f : song.frames) lat.frames.push_back(codec.encode(f));
  lat.empty = codec.encode(PianoState{});
  return lat;
}

// Mean squared error (per scalar) over one minibatch with gradients reduced
// over a fixed block count, then one Adam step.
double sgd_minibatch(Mlp& net, Adam& adam, Eigen::VectorXd& params,
                     const std::vector<Eigen::VectorXd>& inputs,
                     const std::vector<Eigen::VectorXd>& targets,
                     const std::vector<int>& index, std::size_t at, std::size_t len, int jobs) {
  const int n_params = net.n_params();
  const double inv = 1.0 / (static_cast<double>(len) * net.output_dim());

  const std::size_t blocks = std::min<std::size_t>(kGradBlocks, len);
  std::vector<Eigen::VectorXd> block_grad(blocks, Eigen::VectorXd::Zero(n_params));
  std::vector<double> block_loss(blocks, 0.0);

  parallel_for(blocks, jobs, [&](std::size_t bi) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_params);
    for (std::size_t i = bi; i < len; i += blocks) {
      const int row = index[at + i];
      Mlp::Trace trace;
      const Eigen::VectorXd out = net.forward_traced(inputs[static_cast<std::size_t>(row)], trace);
      const Eigen::VectorXd err = out - targets[static_cast<std::size_t>(row)];
      block_loss[bi] += err.squaredNorm() * inv;
      g.setZero();
      net.backward(trace, 2.0 * inv * err, g);
      block_grad[bi] += g;
    }
  });

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
  double loss = 0.0;
  for (std::size_t bi = 0; bi < blocks; ++bi) {
    grad += block_grad[bi];
    loss += block_loss[bi];
  }
  adam.step(params, grad);
  net.set_flat_params(params);
  return loss;
}

double fit_epoch(Mlp& net, Adam& adam, Eigen::VectorXd& params,
                 const std::vector<Eigen::VectorXd>& inputs,
                 const std::vector<Eigen::VectorXd>& targets, int batch, Rng& rng, int jobs) {
  std::vector<int> index(inputs.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<int>(i);
  for (std::size_t i = index.size(); i > 1; --i)
    std::swap(index[i - 1], index[static_cast<std::size_t>(rng.uniform_int(i))]);

  double loss = 0.0;
  std::size_t batches = 0;
  for (std::size_t at = 0; at < index.size(); at += static_cast<std::size_t>(batch)) {
    const std::size_t len = std::min<std::size_t>(batch, index.size() - at);
    loss += sgd_minibatch(net, adam, params, inputs, targets, index, at, len, jobs);
    ++batches;
  }
  return batches > 0 ? loss / static_cast<double>(batches) : 0.0;
}

nlohmann::json vecxd_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vecxd_from(const nlohmann::json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

}  // namespace

EnvBundle SongData::bundle(const HandModelSpec& spec, const KeyGeometry& geom,
                           const EnvConfig& cfg) const {
  return EnvBundle{spec, geom, cfg, song, demo, nominal};
}

const DistillEntry& DistillDataset::by_id(const std::string& id) const {
  for (const auto& s : songs)
    if (s.id == id) return s;
  throw std::runtime_error("dataset has no song '" + id + "'");
}

DistillDataset build_dataset(const std::vector<SongData>& songs,
                             const std::vector<ResidualPolicy>& experts,
                             const HandModelSpec& spec, const KeyGeometry& geom,
                             const EnvConfig& cfg, int jobs) {
  if (songs.size() != experts.size())
    throw std::invalid_argument("build_dataset: one expert policy per song required");

  DistillDataset ds;
  ds.songs.resize(songs.size());
  const int dof = spec.dof();

  parallel_for(songs.size(), jobs, [&](std::size_t si) {
    const SongData& sd = songs[si];
    const EpisodeLog log = rollout_residual(sd.bundle(spec, geom, cfg), experts[si]);
    const std::size_t T = sd.song.frames.size();

    DistillEntry entry;
    entry.id = sd.id;
    entry.goals = sd.song;
    entry.demo = sd.demo;
    entry.proprio.resize(T);
    entry.action.resize(T);

    const Eigen::VectorXd q0 = spec.clamp(sd.nominal[0]);
    for (std::size_t t = 0; t < T; ++t) {
      Eigen::VectorXd p(2 * dof + kNumKeys);
      if (t == 0) {
        p.head(dof) = q0.head(dof);
        p.segment(dof, dof).setZero();
        p.tail(kNumKeys).setZero();
      } else {
        const FrameRecord& prev = log.frames[t - 1];
        const Eigen::VectorXd& q_before = t >= 2 ? log.frames[t - 2].q : q0;
        p.head(dof) = prev.q.head(dof);
        p.segment(dof, dof) = (prev.q.head(dof) - q_before.head(dof)) * cfg.control_hz;
        p.tail(kNumKeys) = prev.key_state;
      }
      entry.proprio[t] = std::move(p);
      entry.action[t] = log.frames[t].action;
    }
    ds.songs[si] = std::move(entry);
  });
  return ds;
}

void DistillDataset::save_dir(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  auto& ids = manifest["songs"] = nlohmann::json::array();
  for (const auto& s : songs) ids.push_back(s.id);
  {
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
  }

  for (const auto& s : songs) {
    const std::string path = dir + "/" + s.id + ".jsonl";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    nlohmann::json header;
    header["type"] = "header";
    header["id"] = s.id;
    header["rate_hz"] = s.goals.rate_hz;
    out << header.dump() << '\n';
    for (std::size_t t = 0; t < s.frames(); ++t) {
      nlohmann::json j;
      j["type"] = "frame";
      j["t"] = t;
      auto& on = j["goal_on"] = nlohmann::json::array();
      for (int k = 0; k < kNumKeys; ++k)
        if (s.goals.frames[t].keys[static_cast<std::size_t>(k)]) on.push_back(k);
      j["goal_pedal"] = int(s.goals.frames[t].pedal);
      auto& tips = j["demo_tips"] = nlohmann::json::array();
      for (const auto& tip : s.demo[t].tips) tips.push_back({tip.x(), tip.y(), tip.z()});
      j["proprio"] = vecxd_json(s.proprio[t]);
      j["action"] = vecxd_json(s.action[t]);
      out << j.dump() << '\n';
    }
  }
}

DistillDataset DistillDataset::load_dir(const std::string& dir) {
  std::ifstream min(dir + "/manifest.json");
  if (!min) throw std::runtime_error("cannot open: " + dir + "/manifest.json");
  nlohmann::json manifest;
  min >> manifest;

  DistillDataset ds;
  for (const auto& jid : manifest.at("songs")) {
    const std::string id = jid.get<std::string>();
    const std::string path = dir + "/" + id + ".jsonl";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);

    DistillEntry entry;
    entry.id = id;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        entry.goals.rate_hz = j.at("rate_hz").get<double>();
      } else if (type == "frame") {
        PianoState goal;
        for (const auto& k : j.at("goal_on"))
          goal.keys[static_cast<std::size_t>(k.get<int>())] = 1;
        goal.pedal = j.at("goal_pedal").get<int>() ? 1 : 0;
        entry.goals.frames.push_back(goal);

        FingertipFrame f;
        f.t = static_cast<double>(entry.demo.size()) / entry.goals.rate_hz;
        const auto& tips = j.at("demo_tips");
        for (std::size_t i = 0; i < kNumFingers; ++i)
          f.tips[i] = Eigen::Vector3d(tips[i][0].get<double>(), tips[i][1].get<double>(),
                                      tips[i][2].get<double>());
        entry.demo.push_back(f);
        entry.proprio.push_back(vecxd_from(j.at("proprio")));
        entry.action.push_back(vecxd_from(j.at("action")));
      } else {
        throw std::runtime_error(path + ": unknown record type '" + type + "'");
      }
    }
    ds.songs.push_back(std::move(entry));
  }
  return ds;
}

HighLevelPolicy::HighLevelPolicy(HighLevelSpec spec, int latent_dim)
    : spec_(std::move(spec)), latent_dim_(latent_dim) {
  std::vector<int> widths;
  widths.push_back(spec_.goal_horizon * latent_dim_ + 3 * kNumFingers);
  for (int w : spec_.hidden) widths.push_back(w);
  widths.push_back(spec_.pred_horizon * 3 * kNumFingers);
  net_ = Mlp(widths);
  in_norm_.mean = Eigen::VectorXd::Zero(widths.front());
  in_norm_.std = Eigen::VectorXd::Ones(widths.front());
  out_norm_.mean = Eigen::VectorXd::Zero(widths.back());
  out_norm_.std = Eigen::VectorXd::Ones(widths.back());
}

Eigen::VectorXd HighLevelPolicy::predict(const Eigen::VectorXd& latents,
                                         const Eigen::VectorXd& current) const {
  if (latents.size() != spec_.goal_horizon * latent_dim_)
    throw std::invalid_argument("HighLevelPolicy::predict: latent input size mismatch");
  if (current.size() != 3 * kNumFingers)
    throw std::invalid_argument("HighLevelPolicy::predict: current fingertip size mismatch");
  Eigen::VectorXd in(latents.size() + current.size());
  in << latents, current;
  return out_norm_.unapply(net_.forward(in_norm_.apply(in)));
}

void HighLevelPolicy::save_json(const std::string& path) const {
  nlohmann::json j;
  j["spec"] = {{"goal_horizon", spec_.goal_horizon}, {"pred_horizon", spec_.pred_horizon},
               {"hidden", spec_.hidden},             {"lr", spec_.lr},
               {"epochs", spec_.epochs},             {"batch", spec_.batch},
               {"noise_std", spec_.noise_std},       {"seed", spec_.seed},
               {"jobs", spec_.jobs}};
  j["latent_dim"] = latent_dim_;
  j["net"] = net_.to_json();
  j["in_norm"] = in_norm_.to_json();
  j["out_norm"] = out_norm_.to_json();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << '\n';
}

HighLevelPolicy HighLevelPolicy::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  HighLevelPolicy p;
  const auto& s = j.at("spec");
  p.spec_.goal_horizon = s.at("goal_horizon").get<int>();
  p.spec_.pred_horizon = s.at("pred_horizon").get<int>();
  p.spec_.hidden = s.at("hidden").get<std::vector<int>>();
  p.spec_.lr = s.at("lr").get<double>();
  p.spec_.epochs = s.at("epochs").get<int>();
  p.spec_.batch = s.at("batch").get<int>();
  p.spec_.noise_std = s.at("noise_std").get<double>();
  p.spec_.seed = s.at("seed").get<std::uint64_t>();
  p.spec_.jobs = s.at("jobs").get<int>();
  p.latent_dim_ = j.at("latent_dim").get<int>();
  p.net_ = Mlp::from_json(j.at("net"));
  p.in_norm_ = Normalizer::from_json(j.at("in_norm"));
  p.out_norm_ = Normalizer::from_json(j.at("out_norm"));
  return p;
}

struct HighLevelTrainer {
  static HighLevelTrainResult run(const std::vector<const DistillEntry*>& songs,
                                  const GoalCodec& codec, const HighLevelSpec& spec) {
    if (songs.empty()) throw std::invalid_argument("train_high_level: no songs");
    HighLevelPolicy policy(spec, codec.latent_dim());

    // Row layout: [latent goals of frames t..t+Hg-1 | demo tips before t];
    // target: demo tips of frames t..t+Hp-1 (last frame repeated past the
    // end).
    std::vector<Eigen::VectorXd> clean_in, targets;
    for (const DistillEntry* song : songs) {
      const SongLatents lat = encode_song(codec, song->goals);
      const long T = static_cast<long>(song->frames());
      for (long t = 0; t < T; ++t) {
        Eigen::VectorXd in(policy.net_.input_dim());
        for (int k = 0; k < spec.goal_horizon; ++k)
          in.segment(k * codec.latent_dim(), codec.latent_dim()) = lat.at(t + k);
        in.tail(3 * kNumFingers) =
            flatten_tips(song->demo[static_cast<std::size_t>(std::max(0L, t - 1))].tips);
        clean_in.push_back(std::move(in));

        Eigen::VectorXd target(policy.net_.output_dim());
        for (int k = 0; k < spec.pred_horizon; ++k) {
          const std::size_t idx = static_cast<std::size_t>(std::min(t + k, T - 1));
          target.segment(3 * kNumFingers * k, 3 * kNumFingers) = flatten_tips(song->demo[idx].tips);
        }
        targets.push_back(std::move(target));
      }
    }

    policy.in_norm_ = Normalizer::fit(clean_in);
    policy.out_norm_ = Normalizer::fit(targets);

    Rng rng(spec.seed);
    policy.net_.init_xavier(rng);
    Eigen::VectorXd params = policy.net_.flat_params();
    Adam adam;
    adam.lr = spec.lr;

    std::vector<Eigen::VectorXd> norm_targets(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
      norm_targets[i] = policy.out_norm_.apply(targets[i]);

    HighLevelTrainResult result;
    std::vector<Eigen::VectorXd> inputs(clean_in.size());
    const int tip_dim = 3 * kNumFingers;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      // Fresh noise on the current-fingertip block every epoch.
      for (std::size_t i = 0; i < clean_in.size(); ++i) {
        Eigen::VectorXd in = clean_in[i];
        for (int d = 0; d < tip_dim; ++d)
          in[in.size() - tip_dim + d] += spec.noise_std * rng.normal();
        inputs[i] = policy.in_norm_.apply(in);
      }
      const double loss =
          fit_epoch(policy.net_, adam, params, inputs, norm_targets, spec.batch, rng, spec.jobs);
      result.curve.push_back({epoch, loss});
    }
    result.policy = std::move(policy);
    return result;
  }
};

HighLevelTrainResult train_high_level(const std::vector<const DistillEntry*>& songs,
                                      const GoalCodec& codec, const HighLevelSpec& spec) {
  return HighLevelTrainer::run(songs, codec, spec);
}

LowLevelPolicy::LowLevelPolicy(LowLevelSpec spec, int latent_dim, int total_dof)
    : spec_(std::move(spec)), latent_dim_(latent_dim), total_dof_(total_dof) {
  const int dof = total_dof - 1;
  std::vector<int> widths;
  widths.push_back(spec_.horizon * 3 * kNumFingers + spec_.horizon * latent_dim_ +
                   2 * dof + kNumKeys);
  for (int w : spec_.hidden) widths.push_back(w);
  widths.push_back(spec_.horizon * total_dof_);
  net_ = Mlp(widths);
  in_norm_.mean = Eigen::VectorXd::Zero(widths.front());
  in_norm_.std = Eigen::VectorXd::Ones(widths.front());
  out_norm_.mean = Eigen::VectorXd::Zero(widths.back());
  out_norm_.std = Eigen::VectorXd::Ones(widths.back());
}

LowLevelPolicy LowLevelPolicy::zeros(LowLevelSpec spec, int latent_dim, int total_dof) {
  return LowLevelPolicy(std::move(spec), latent_dim, total_dof);
}

Eigen::VectorXd LowLevelPolicy::predict(const Eigen::VectorXd& tips,
                                        const Eigen::VectorXd& latents,
                                        const Eigen::VectorXd& proprio) const {
  if (tips.size() != spec_.horizon * 3 * kNumFingers)
    throw std::invalid_argument("LowLevelPolicy::predict: fingertip input size mismatch");
  if (latents.size() != spec_.horizon * latent_dim_)
    throw std::invalid_argument("LowLevelPolicy::predict: latent input size mismatch");
  if (proprio.size() != 2 * (total_dof_ - 1) + kNumKeys)
    throw std::invalid_argument("LowLevelPolicy::predict: proprio input size mismatch");
  Eigen::VectorXd in(tips.size() + latents.size() + proprio.size());
  in << tips, latents, proprio;
  return out_norm_.unapply(net_.forward(in_norm_.apply(in)));
}

void LowLevelPolicy::save_json(const std::string& path) const {
  nlohmann::json j;
  j["spec"] = {{"horizon", spec_.horizon},
               {"hidden", spec_.hidden},
               {"lr", spec_.lr},
               {"epochs", spec_.epochs},
               {"batch", spec_.batch},
               {"mode", spec_.mode == LowLevelMode::residual ? "residual" : "direct"},
               {"seed", spec_.seed},
               {"jobs", spec_.jobs}};
  j["latent_dim"] = latent_dim_;
  j["total_dof"] = total_dof_;
  j["net"] = net_.to_json();
  j["in_norm"] = in_norm_.to_json();
  j["out_norm"] = out_norm_.to_json();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << '\n';
}

LowLevelPolicy LowLevelPolicy::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  LowLevelPolicy p;
  const auto& s = j.at("spec");
  p.spec_.horizon = s.at("horizon").get<int>();
  p.spec_.hidden = s.at("hidden").get<std::vector<int>>();
  p.spec_.lr = s.at("lr").get<double>();
  p.spec_.epochs = s.at("epochs").get<int>();
  p.spec_.batch = s.at("batch").get<int>();
  const std::string mode = s.at("mode").get<std::string>();
  if (mode == "residual") p.spec_.mode = LowLevelMode::residual;
  else if (mode == "direct") p.spec_.mode = LowLevelMode::direct;
  else throw std::runtime_error(path + ": unknown low-level mode '" + mode + "'");
  p.spec_.seed = s.at("seed").get<std::uint64_t>();
  p.spec_.jobs = s.at("jobs").get<int>();
  p.latent_dim_ = j.at("latent_dim").get<int>();
  p.total_dof_ = j.at("total_dof").get<int>();
  p.net_ = Mlp::from_json(j.at("net"));
  p.in_norm_ = Normalizer::from_json(j.at("in_norm"));
  p.out_norm_ = Normalizer::from_json(j.at("out_norm"));
  return p;
}

namespace {

// IK actions for one chunk: track the given fingertip frames starting from
// q_start, one tracked frame per horizon slot. Used both for residual-mode
// training targets and at execution time, so the two stay consistent.
std::vector<Eigen::VectorXd> ik_chunk(const HandModelSpec& spec, const Eigen::VectorXd& q_start,
                                      const std::vector<std::array<Eigen::Vector3d, kNumFingers>>& tip_frames,
                                      const IkParams& ik) {
  std::vector<Eigen::VectorXd> actions;
  actions.reserve(tip_frames.size());
  Eigen::VectorXd q = spec.clamp(q_start);
  for (const auto& tips : tip_frames) {
    std::vector<IkTask> tasks(kNumFingers);
    for (int i = 0; i < kNumFingers; ++i) tasks[static_cast<std::size_t>(i)] = {i, tips[static_cast<std::size_t>(i)]};
    for (int it = 0; it < ik.iters_per_frame; ++it) q = ik_step(spec, q, tasks, ik).q_next;
    actions.push_back(q);
  }
  return actions;
}

}  // namespace

struct LowLevelTrainer {
  static LowLevelTrainResult run(const std::vector<const DistillEntry*>& songs,
                                 const GoalCodec& codec, const LowLevelSpec& spec,
                                 const HandModelSpec& hand_spec, const IkParams& ik) {
    if (songs.empty()) throw std::invalid_argument("train_low_level: no songs");
    const int total_dof = static_cast<int>(songs.front()->action.front().size());
    LowLevelPolicy policy(spec, codec.latent_dim(), total_dof);

    std::vector<Eigen::VectorXd> inputs, targets;
    std::vector<std::pair<const DistillEntry*, long>> rows;
    for (const DistillEntry* song : songs) {
      const SongLatents lat = encode_song(codec, song->goals);
      const long T = static_cast<long>(song->frames());
      for (long t = 0; t < T; ++t) {
        rows.emplace_back(song, t);
        Eigen::VectorXd in(policy.net_.input_dim());
        Eigen::Index at = 0;
        for (int k = 0; k < spec.horizon; ++k) {
          const std::size_t idx = static_cast<std::size_t>(std::min(t + k, T - 1));
          in.segment(at, 3 * kNumFingers) = flatten_tips(song->demo[idx].tips);
          at += 3 * kNumFingers;
        }
        for (int k = 0; k < spec.horizon; ++k) {
          in.segment(at, codec.latent_dim()) = lat.at(t + k);
          at += codec.latent_dim();
        }
        in.segment(at, song->proprio[static_cast<std::size_t>(t)].size()) =
            song->proprio[static_cast<std::size_t>(t)];
        inputs.push_back(std::move(in));

        Eigen::VectorXd target(policy.net_.output_dim());
        for (int k = 0; k < spec.horizon; ++k) {
          const std::size_t idx = static_cast<std::size_t>(std::min(t + k, T - 1));
          target.segment(static_cast<Eigen::Index>(k) * total_dof, total_dof) =
              song->action[idx];
        }
        targets.push_back(std::move(target));
      }
    }

    if (spec.mode == LowLevelMode::residual) {
      // Subtract the IK chunk actions; what remains is the expert's
      // correction on top of plain fingertip tracking.
      const int dof = total_dof - 1;
      parallel_for(rows.size(), spec.jobs, [&](std::size_t ri) {
        const auto& [song, t] = rows[ri];
        const long T = static_cast<long>(song->frames());
        Eigen::VectorXd q_start(total_dof);
        q_start.head(dof) = song->proprio[static_cast<std::size_t>(t)].head(dof);
        q_start[dof] = 0.0;
        std::vector<std::array<Eigen::Vector3d, kNumFingers>> tip_frames;
        for (int k = 0; k < spec.horizon; ++k)
          tip_frames.push_back(song->demo[static_cast<std::size_t>(std::min(t + k, T - 1))].tips);
        const auto ik_actions = ik_chunk(hand_spec, q_start, tip_frames, ik);
        for (int k = 0; k < spec.horizon; ++k)
          targets[ri].segment(static_cast<Eigen::Index>(k) * total_dof, total_dof) -=
              ik_actions[static_cast<std::size_t>(k)];
      });
    }

    policy.in_norm_ = Normalizer::fit(inputs);
    policy.out_norm_ = Normalizer::fit(targets);
    for (auto& in : inputs) in = policy.in_norm_.apply(in);
    for (auto& tg : targets) tg = policy.out_norm_.apply(tg);

    Rng rng(spec.seed);
    policy.net_.init_xavier(rng);
    Eigen::VectorXd params = policy.net_.flat_params();
    Adam adam;
    adam.lr = spec.lr;

    LowLevelTrainResult result;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      const double loss =
          fit_epoch(policy.net_, adam, params, inputs, targets, spec.batch, rng, spec.jobs);
      result.curve.push_back({epoch, loss});
    }
    result.policy = std::move(policy);
    return result;
  }
};

LowLevelTrainResult train_low_level(const std::vector<const DistillEntry*>& songs,
                                    const GoalCodec& codec, const LowLevelSpec& spec,
                                    const HandModelSpec& hand_spec, const IkParams& ik) {
  return LowLevelTrainer::run(songs, codec, spec, hand_spec, ik);
}

EpisodeLog chunked_execute(const EnvBundle& bundle, const HighLevelPolicy* hl,
                           const LowLevelPolicy& ll, const GoalCodec& codec,
                           const IkParams& ik, bool oracle_hl) {
  if (!oracle_hl && hl == nullptr)
    throw std::invalid_argument("chunked_execute: need a high-level policy or oracle_hl");
  if (!oracle_hl && hl->spec().pred_horizon != ll.spec().horizon)
    throw std::invalid_argument("chunked_execute: high/low level horizon mismatch");

  PianoEnv env(bundle.spec, bundle.geom, bundle.cfg);
  Observation obs = env.reset(bundle.song, bundle.demo, bundle.nominal);
  const long T = env.frame_count();
  const int H = ll.spec().horizon;
  const int latent = codec.latent_dim();
  const int tip_dim = 3 * kNumFingers;
  const SongLatents lat = encode_song(codec, bundle.song);

  while (!env.done()) {
    const long t = env.t();

    Eigen::VectorXd tips_chunk(H * tip_dim);
    if (oracle_hl) {
      for (int k = 0; k < H; ++k) {
        const std::size_t idx = static_cast<std::size_t>(std::min(t + k, T - 1));
        tips_chunk.segment(k * tip_dim, tip_dim) = flatten_tips(bundle.demo[idx].tips);
      }
    } else {
      Eigen::VectorXd lat_in(hl->spec().goal_horizon * latent);
      for (int k = 0; k < hl->spec().goal_horizon; ++k)
        lat_in.segment(k * latent, latent) = lat.at(t + k);
      tips_chunk = hl->predict(lat_in, flatten_tips(forward_kinematics(bundle.spec, env.q())));
    }

    // Snap predicted y coordinates onto the goal keys with the retarget rule.
    std::vector<std::array<Eigen::Vector3d, kNumFingers>> tip_frames(static_cast<std::size_t>(H));
    for (int k = 0; k < H; ++k) {
      auto tips = unflatten_tips(tips_chunk, k * tip_dim);
      const long idx = t + k;
      if (idx < T) {
        tips = align_frame(tips, bundle.song.frames[static_cast<std::size_t>(idx)], bundle.geom).tips;
      }
      tip_frames[static_cast<std::size_t>(k)] = tips;
      tips_chunk.segment(k * tip_dim, tip_dim) = flatten_tips(tips);
    }

    Eigen::VectorXd lat_chunk(H * latent);
    for (int k = 0; k < H; ++k) lat_chunk.segment(k * latent, latent) = lat.at(t + k);

    Eigen::VectorXd proprio(2 * obs.q.size() + kNumKeys);
    proprio << obs.q, obs.qdot, obs.key_state;

    const Eigen::VectorXd out = ll.predict(tips_chunk, lat_chunk, proprio);

    std::vector<Eigen::VectorXd> actions(static_cast<std::size_t>(H));
    if (ll.mode() == LowLevelMode::residual) {
      const auto base = ik_chunk(bundle.spec, env.q(), tip_frames, ik);
      for (int k = 0; k < H; ++k)
        actions[static_cast<std::size_t>(k)] =
            base[static_cast<std::size_t>(k)] + out.segment(k * ll.total_dof(), ll.total_dof());
    } else {
      for (int k = 0; k < H; ++k)
        actions[static_cast<std::size_t>(k)] = out.segment(k * ll.total_dof(), ll.total_dof());
    }

    for (int k = 0; k < H && !env.done(); ++k)
      obs = env.step(actions[static_cast<std::size_t>(k)]).obs;
  }
  return env.log();
}

}  // namespace pianomime
