#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "pianomime/common.hpp"
#include "pianomime/residual.hpp"
#include "test_util.hpp"

using namespace pianomime;

namespace {

EnvBundle silent_bundle(int frames) {
  EnvBundle b;
  b.spec = HandModelSpec::default_spec();
  b.geom = KeyGeometry::standard_piano();
  b.cfg = EnvConfig{};
  b.song.rate_hz = b.cfg.control_hz;
  b.song.frames.resize(static_cast<std::size_t>(frames));
  b.demo.resize(static_cast<std::size_t>(frames));
  b.nominal.resize(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    b.demo[static_cast<std::size_t>(t)].t = t / b.song.rate_hz;
    for (std::size_t f = 0; f < kNumFingers; ++f)
      b.demo[static_cast<std::size_t>(t)].tips[f] =
          Eigen::Vector3d(-0.3, -0.8 + 0.01 * static_cast<double>(f), 0.1);
    b.nominal[static_cast<std::size_t>(t)] = b.spec.home();
  }
  return b;
}

}  // namespace

TEST_SUITE("residual") {
  TEST_CASE("single basis function is constant one") {
    ResidualFeaturizer feat;
    feat.n_basis = 1;
    for (double phase : {0.0, 0.25, 0.5, 1.0}) {
      const Eigen::VectorXd b = feat.basis(phase);
      REQUIRE(b.size() == 1);
      CHECK(b[0] == 1.0);
    }
  }

  TEST_CASE("basis matches the Gaussian bump formula") {
    ResidualFeaturizer feat;
    feat.n_basis = 4;
    feat.width_scale = 0.8;
    const double spacing = 1.0 / 3.0;
    const double width = spacing * feat.width_scale;
    for (double phase : {0.0, 0.1, 1.0 / 3.0, 0.62, 1.0}) {
      const Eigen::VectorXd b = feat.basis(phase);
      REQUIRE(b.size() == 4);
      for (int k = 0; k < 4; ++k) {
        const double z = (phase - k * spacing) / width;
        CHECK(b[k] == std::exp(-z * z));
      }
    }
    // A bump evaluates to exactly one at its own center.
    CHECK(feat.basis(1.0 / 3.0)[1] == 1.0);
    CHECK(feat.basis(0.0)[0] == 1.0);
    CHECK(feat.basis(1.0)[3] == 1.0);
  }

  TEST_CASE("basis rejects a non-positive count") {
    ResidualFeaturizer feat;
    feat.n_basis = 0;
    CHECK_THROWS_AS(feat.basis(0.5), std::invalid_argument);
  }

  TEST_CASE("zeros policy has the right dimension and an all-zero residual") {
    ResidualFeaturizer feat;
    const ResidualPolicy p = ResidualPolicy::zeros(feat);
    CHECK(p.dim() == 8 * feat.n_basis);
    CHECK(p.theta.size() == p.dim());
    CHECK(p.theta.cwiseAbs().sum() == 0.0);

    const HandModelSpec spec = HandModelSpec::default_spec();
    const Eigen::VectorXd r = p.residual(spec, 0.37);
    CHECK(r.size() == spec.dof());
    CHECK(r.cwiseAbs().sum() == 0.0);
  }

  TEST_CASE("joints within a group share the residual; clamps depend on joint type") {
    const HandModelSpec spec = HandModelSpec::default_spec();
    ResidualFeaturizer feat;
    feat.n_basis = 1;  // basis is [1], so the raw residual equals the group weight
    ResidualPolicy p = ResidualPolicy::zeros(feat);
    p.theta << 0.002, 0.02, 0.1, 0.03, -0.002, -0.02, -0.1, -0.03;

    const Eigen::VectorXd r = p.residual(spec, 0.5);
    const auto infos = spec.joint_infos();
    REQUIRE(r.size() == static_cast<Eigen::Index>(infos.size()));
    for (std::size_t j = 0; j < infos.size(); ++j) {
      int cat = 0;
      switch (infos[j].category) {
        case JointCategory::lat_slide: cat = 0; break;
        case JointCategory::vert_slide: cat = 1; break;
        case JointCategory::abduction: cat = 2; break;
        case JointCategory::flexion: cat = 3; break;
      }
      const double raw = p.theta[infos[j].hand * 4 + cat];
      const double bound =
          infos[j].type == JointType::prismatic ? p.bound_prismatic : p.bound_revolute;
      const double expect = std::clamp(raw, -bound, bound);
      CHECK(r[static_cast<Eigen::Index>(j)] == expect);
    }
    // Clamping actually engaged on both joint types and both signs.
    CHECK(r.maxCoeff() == p.bound_revolute);
    CHECK(r.minCoeff() == -p.bound_revolute);
  }

  TEST_CASE("residual rejects a mismatched parameter vector") {
    ResidualFeaturizer feat;
    ResidualPolicy p = ResidualPolicy::zeros(feat);
    p.theta = Eigen::VectorXd::Zero(p.dim() + 1);
    CHECK_THROWS_AS(p.residual(HandModelSpec::default_spec(), 0.0), std::invalid_argument);
  }

  TEST_CASE("zero residual rollout reproduces plain nominal tracking") {
    const EnvBundle bundle = silent_bundle(4);
    const EpisodeLog log = rollout_residual(bundle, ResidualPolicy::zeros(ResidualFeaturizer{}));

    PianoEnv env(bundle.spec, bundle.geom, bundle.cfg);
    env.reset(bundle.song, bundle.demo, bundle.nominal);
    for (const auto& a : bundle.nominal) env.step(a);

    REQUIRE(log.frames.size() == env.log().frames.size());
    for (std::size_t t = 0; t < log.frames.size(); ++t) {
      CHECK((log.frames[t].q - env.log().frames[t].q).cwiseAbs().maxCoeff() == 0.0);
      CHECK(log.frames[t].reward.total == env.log().frames[t].reward.total);
    }
    CHECK(log.total_reward() == env.log().total_reward());
  }

  TEST_CASE("rollout applies the clamped residual on top of the nominal action") {
    EnvBundle bundle = silent_bundle(3);
    ResidualFeaturizer feat;
    feat.n_basis = 1;
    ResidualPolicy p = ResidualPolicy::zeros(feat);
    p.theta << 0.004, 0.0, 0.0, 0.01, -0.006, 0.0, 0.0, 0.0;

    const EpisodeLog log = rollout_residual(bundle, p);
    REQUIRE(log.frames.size() == 3);
    const int n = bundle.spec.dof();
    for (std::size_t t = 0; t < 3; ++t) {
      Eigen::VectorXd u = bundle.nominal[t];
      u.head(n) += p.residual(bundle.spec, static_cast<double>(t) / 2.0);
      const Eigen::VectorXd expect = bundle.spec.clamp(u);
      CHECK((log.frames[t].action - expect).cwiseAbs().maxCoeff() == 0.0);
    }
    // The residual never touches the pedal slot.
    for (const auto& f : log.frames) CHECK(f.action[n] == bundle.nominal[0][n]);
  }

  TEST_CASE("single-frame rollout uses phase zero") {
    EnvBundle bundle = silent_bundle(1);
    ResidualFeaturizer feat;
    feat.n_basis = 3;
    ResidualPolicy p = ResidualPolicy::zeros(feat);
    p.theta = Eigen::VectorXd::Constant(p.dim(), 0.001);

    const EpisodeLog log = rollout_residual(bundle, p);
    REQUIRE(log.frames.size() == 1);
    Eigen::VectorXd u = bundle.nominal[0];
    u.head(bundle.spec.dof()) += p.residual(bundle.spec, 0.0);
    CHECK((log.frames[0].action - bundle.spec.clamp(u)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("policy json round trip preserves every field bitwise") {
    ResidualFeaturizer feat;
    feat.n_basis = 5;
    feat.width_scale = 1.3;
    ResidualPolicy p = ResidualPolicy::zeros(feat);
    Rng rng(321);
    for (Eigen::Index i = 0; i < p.theta.size(); ++i) p.theta[i] = rng.normal(0.0, 0.01);
    p.bound_prismatic = 0.008;
    p.bound_revolute = 0.04;

    testutil::TempDir tmp;
    const std::string path = tmp.file("policy.json");
    p.save_json(path);
    const ResidualPolicy q = ResidualPolicy::load_json(path);
    CHECK(q.feat.n_basis == p.feat.n_basis);
    CHECK(q.feat.width_scale == p.feat.width_scale);
    CHECK(q.n_groups == p.n_groups);
    CHECK(q.bound_prismatic == p.bound_prismatic);
    CHECK(q.bound_revolute == p.bound_revolute);
    REQUIRE(q.theta.size() == p.theta.size());
    CHECK((q.theta - p.theta).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS(ResidualPolicy::load_json(tmp.file("missing.json")));
  }
}
