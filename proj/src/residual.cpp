#include "pianomime/residual.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pianomime {

Eigen::VectorXd ResidualFeaturizer::basis(double phase) const {
  if (n_basis < 1) throw std::invalid_argument("ResidualFeaturizer: n_basis must be >= 1");
  Eigen::VectorXd b(n_basis);
  if (n_basis == 1) {
    b[0] = 1.0;
    return b;
  }
  const double spacing = 1.0 / (n_basis - 1);
  const double width = spacing * width_scale;
  for (int k = 0; k < n_basis; ++k) {
    const double c = k * spacing;
    const double z = (phase - c) / width;
    b[k] = std::exp(-z * z);
  }
  return b;
}

ResidualPolicy ResidualPolicy::zeros(const ResidualFeaturizer& f) {
  ResidualPolicy p;
  p.feat = f;
  p.theta = Eigen::VectorXd::Zero(p.n_groups * f.n_basis);
  return p;
}

namespace {

int group_of(const JointInfo& info) {
  int cat = 0;
  switch (info.category) {
    case JointCategory::lat_slide: cat = 0; break;
    case JointCategory::vert_slide: cat = 1; break;
    case JointCategory::abduction: cat = 2; break;
    case JointCategory::flexion: cat = 3; break;
  }
  return info.hand * 4 + cat;
}

}  // namespace

Eigen::VectorXd ResidualPolicy::residual(const HandModelSpec& spec, double phase) const {
  if (theta.size() != dim())
    throw std::invalid_argument("ResidualPolicy: theta has wrong dimension");
  const Eigen::VectorXd b = feat.basis(phase);
  const auto infos = spec.joint_infos();
  Eigen::VectorXd r(static_cast<Eigen::Index>(infos.size()));
  for (std::size_t j = 0; j < infos.size(); ++j) {
    const int g = group_of(infos[j]);
    if (g >= n_groups)
      throw std::invalid_argument("ResidualPolicy: joint group out of range");
    const double raw = theta.segment(g * feat.n_basis, feat.n_basis).dot(b);
    const double bound =
        infos[j].type == JointType::prismatic ? bound_prismatic : bound_revolute;
    r[static_cast<Eigen::Index>(j)] = clampd(raw, -bound, bound);
  }
  return r;
}

void ResidualPolicy::save_json(const std::string& path) const {
  nlohmann::json j;
  j["n_basis"] = feat.n_basis;
  j["width_scale"] = feat.width_scale;
  j["n_groups"] = n_groups;
  j["bound_prismatic"] = bound_prismatic;
  j["bound_revolute"] = bound_revolute;
  auto& th = j["theta"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < theta.size(); ++i) th.push_back(theta[i]);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

ResidualPolicy ResidualPolicy::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  ResidualPolicy p;
  p.feat.n_basis = j.at("n_basis").get<int>();
  p.feat.width_scale = j.at("width_scale").get<double>();
  p.n_groups = j.at("n_groups").get<int>();
  p.bound_prismatic = j.at("bound_prismatic").get<double>();
  p.bound_revolute = j.at("bound_revolute").get<double>();
  const auto& th = j.at("theta");
  p.theta.resize(static_cast<Eigen::Index>(th.size()));
  for (std::size_t i = 0; i < th.size(); ++i)
    p.theta[static_cast<Eigen::Index>(i)] = th[i].get<double>();
  if (p.theta.size() != p.dim())
    throw std::runtime_error(path + ": theta size does not match n_groups * n_basis");
  return p;
}

EpisodeLog rollout_residual(const EnvBundle& bundle, const ResidualPolicy& policy) {
  PianoEnv env(bundle.spec, bundle.geom, bundle.cfg);
  env.reset(bundle.song, bundle.demo, bundle.nominal);
  const int T = env.frame_count();
  const int n = bundle.spec.dof();
  for (int t = 0; t < T; ++t) {
    const double phase = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
    Eigen::VectorXd u = bundle.nominal[static_cast<std::size_t>(t)];
    u.head(n) += policy.residual(bundle.spec, phase);
    env.step(u);
  }
  return env.log();
}

}  // namespace pianomime
