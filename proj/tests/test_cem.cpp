#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "pianomime/cem.hpp"
#include "pianomime/common.hpp"
#include "test_util.hpp"

using namespace pianomime;

TEST_SUITE("cem") {
  TEST_CASE("converges to the optimum of a smooth quadratic") {
    Eigen::VectorXd target(3);
    target << 0.004, -0.002, 0.003;
    CemConfig cfg;
    cfg.population = 48;
    cfg.elites = 8;
    cfg.iterations = 50;
    cfg.seed = 11;
    const CemResult res = cem_optimize(
        3, [&](const Eigen::VectorXd& x) { return -(x - target).squaredNorm(); }, cfg);
    CHECK((res.best_params - target).cwiseAbs().maxCoeff() < 2e-3);
    CHECK(res.best_return > -1e-5);
    CHECK(res.best_return <= 0.0);
  }

  TEST_CASE("curve is per-iteration and best return is monotone") {
    CemConfig cfg;
    cfg.population = 16;
    cfg.elites = 4;
    cfg.iterations = 12;
    cfg.seed = 5;
    const CemResult res = cem_optimize(
        2, [](const Eigen::VectorXd& x) { return -x.squaredNorm(); }, cfg);
    REQUIRE(static_cast<int>(res.curve.size()) == cfg.iterations);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < res.curve.size(); ++i) {
      const CemIterate& it = res.curve[i];
      CHECK(it.iter == static_cast<int>(i));
      best = std::max(best, it.iter_best);
      CHECK(it.best_return == best);
      CHECK(it.iter_best <= it.best_return);
      CHECK(it.elite_mean <= it.iter_best + 1e-12);
      CHECK(it.mean_std >= 0.0);
    }
    CHECK(res.curve.back().best_return == res.best_return);
  }

  TEST_CASE("ties break toward the lower population index") {
    CemConfig cfg;
    cfg.population = 8;
    cfg.elites = 3;
    cfg.iterations = 4;
    cfg.seed = 99;
    const int dim = 5;
    // Constant objective: every sample scores the same, so the winner must be
    // the very first sample of the very first iteration.
    const CemResult res =
        cem_optimize(dim, [](const Eigen::VectorXd&) { return 0.0; }, cfg);

    Rng replay(cfg.seed);
    Eigen::VectorXd first(dim);
    for (int d = 0; d < dim; ++d) first[d] = 0.0 + cfg.init_std * replay.normal();
    CHECK((res.best_params - first).cwiseAbs().maxCoeff() == 0.0);
    CHECK(res.best_return == 0.0);
    for (const auto& it : res.curve) {
      CHECK(it.iter_best == 0.0);
      CHECK(it.elite_mean == 0.0);
    }
  }

  TEST_CASE("non-finite objective values raise CemError") {
    CemConfig cfg;
    cfg.population = 4;
    cfg.elites = 2;
    cfg.iterations = 3;
    CHECK_THROWS_AS(
        cem_optimize(2,
                     [](const Eigen::VectorXd&) {
                       return std::numeric_limits<double>::quiet_NaN();
                     },
                     cfg),
        CemError);
    CHECK_THROWS_AS(
        cem_optimize(2,
                     [](const Eigen::VectorXd&) {
                       return std::numeric_limits<double>::infinity();
                     },
                     cfg),
        CemError);
  }

  TEST_CASE("configuration errors raise CemError") {
    const auto obj = [](const Eigen::VectorXd& x) { return -x.squaredNorm(); };
    CemConfig cfg;
    CHECK_THROWS_AS(cem_optimize(0, obj, cfg), CemError);

    CemConfig bad = cfg;
    bad.population = 1;
    CHECK_THROWS_AS(cem_optimize(2, obj, bad), CemError);
    bad = cfg;
    bad.elites = 0;
    CHECK_THROWS_AS(cem_optimize(2, obj, bad), CemError);
    bad = cfg;
    bad.elites = bad.population + 1;
    CHECK_THROWS_AS(cem_optimize(2, obj, bad), CemError);
    bad = cfg;
    bad.init_std = 0.0;
    CHECK_THROWS_AS(cem_optimize(2, obj, bad), CemError);

    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(cem_optimize(2, obj, cfg, wrong), CemError);
  }

  TEST_CASE("search starts from the provided initial mean") {
    CemConfig cfg;
    cfg.population = 16;
    cfg.elites = 4;
    cfg.iterations = 1;
    cfg.init_std = 1e-3;
    cfg.seed = 2;
    Eigen::VectorXd init(2);
    init << 5.0, -3.0;
    const CemResult res = cem_optimize(
        2, [](const Eigen::VectorXd& x) { return -x.squaredNorm(); }, cfg, init);
    CHECK((res.best_params - init).cwiseAbs().maxCoeff() < 0.01);
    CHECK(res.best_return == doctest::Approx(-34.0).epsilon(0.01));
  }

  TEST_CASE("results are reproducible for a fixed seed and differ across seeds") {
    const auto obj = [](const Eigen::VectorXd& x) {
      return -(x - Eigen::VectorXd::Constant(x.size(), 0.002)).squaredNorm();
    };
    CemConfig cfg;
    cfg.population = 12;
    cfg.elites = 3;
    cfg.iterations = 8;
    cfg.seed = 77;
    const CemResult a = cem_optimize(4, obj, cfg);
    const CemResult b = cem_optimize(4, obj, cfg);
    CHECK((a.best_params - b.best_params).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
      CHECK(a.curve[i].iter_best == b.curve[i].iter_best);
      CHECK(a.curve[i].elite_mean == b.curve[i].elite_mean);
      CHECK(a.curve[i].mean_std == b.curve[i].mean_std);
    }

    CemConfig other = cfg;
    other.seed = 78;
    const CemResult c = cem_optimize(4, obj, other);
    CHECK((a.best_params - c.best_params).cwiseAbs().maxCoeff() > 0.0);
  }

  TEST_CASE("outcome is independent of the worker count") {
    const auto obj = [](const Eigen::VectorXd& x) {
      return -(x - Eigen::VectorXd::Constant(x.size(), -0.001)).squaredNorm();
    };
    CemConfig serial;
    serial.population = 24;
    serial.elites = 6;
    serial.iterations = 10;
    serial.seed = 31;
    serial.jobs = 1;
    CemConfig threaded = serial;
    threaded.jobs = 4;

    const CemResult a = cem_optimize(3, obj, serial);
    const CemResult b = cem_optimize(3, obj, threaded);
    CHECK((a.best_params - b.best_params).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.best_return == b.best_return);
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i)
      CHECK(a.curve[i].iter_best == b.curve[i].iter_best);
  }

  TEST_CASE("residual training wires the policy and curve through") {
    EnvBundle bundle;
    bundle.spec = HandModelSpec::default_spec();
    bundle.geom = KeyGeometry::standard_piano();
    bundle.cfg = EnvConfig{};
    bundle.song.rate_hz = bundle.cfg.control_hz;
    bundle.song.frames.resize(2);
    bundle.demo.resize(2);
    bundle.nominal.assign(2, bundle.spec.home());
    const auto home_tips = forward_kinematics(bundle.spec, bundle.spec.home());
    for (auto& d : bundle.demo) d.tips = home_tips;

    ResidualFeaturizer feat;
    feat.n_basis = 2;
    CemConfig cfg;
    cfg.population = 8;
    cfg.elites = 2;
    cfg.iterations = 2;
    cfg.seed = 1;
    const ResidualTrainResult res = train_residual_cem(bundle, feat, cfg);
    CHECK(res.policy.feat.n_basis == 2);
    CHECK(res.policy.theta.size() == res.policy.dim());
    CHECK(static_cast<int>(res.curve.size()) == cfg.iterations);
    // A silent two-frame song at the home pose scores close to perfectly even
    // though every sampled residual perturbs the pose a little.
    CHECK(res.best_return > 1.5);
    CHECK(res.best_return <= 2.0 + 1e-12);
    CHECK(res.best_return == res.curve.back().best_return);
  }

  TEST_CASE("training curve csv has one row per iteration") {
    CemConfig cfg;
    cfg.population = 6;
    cfg.elites = 2;
    cfg.iterations = 5;
    const CemResult res = cem_optimize(
        2, [](const Eigen::VectorXd& x) { return -x.squaredNorm(); }, cfg);
    testutil::TempDir tmp;
    const std::string path = tmp.file("curve.csv");
    save_cem_curve_csv(path, res.curve);
    const std::string text = testutil::slurp(path);
    CHECK(text.rfind("iter,best_return,iter_best,elite_mean,mean_std\n", 0) == 0);
    int lines = 0;
    for (char c : text)
      if (c == '\n') ++lines;
    CHECK(lines == 1 + cfg.iterations);
  }
}
