#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <tuple>
#include <utility>

#include "pianomime/env.hpp"
#include "pianomime/geometry.hpp"
#include "pianomime/hand_model.hpp"
#include "test_util.hpp"

using namespace pianomime;

namespace {

const KeyGeometry& geom() {
  static KeyGeometry g = KeyGeometry::standard_piano();
  return g;
}

const HandModelSpec& spec() {
  static HandModelSpec s = HandModelSpec::default_spec();
  return s;
}

// Fingertips parked far behind the keyboard, touching nothing.
std::array<Eigen::Vector3d, kNumFingers> parked_tips() {
  std::array<Eigen::Vector3d, kNumFingers> tips;
  for (std::size_t i = 0; i < kNumFingers; ++i)
    tips[i] = Eigen::Vector3d(-0.5, -1.0 + 0.01 * static_cast<double>(i), 0.1);
  return tips;
}

// A fingertip resting on the given key at the given depression fraction.
Eigen::Vector3d tip_on_key(int key, double depression) {
  const Key& k = geom().keys[static_cast<std::size_t>(key)];
  const double x = 0.5 * (k.x_front + k.x_back);
  const double z = k.top_z - depression * 0.008;
  return Eigen::Vector3d(x, k.center_y, z);
}

PianoState goal_of(std::initializer_list<int> keys, int pedal = 0) {
  PianoState s;
  for (int k : keys) s.keys[static_cast<std::size_t>(k)] = 1;
  s.pedal = pedal;
  return s;
}

Eigen::VectorXd depressions_of(std::initializer_list<std::pair<int, double>> entries) {
  Eigen::VectorXd k = Eigen::VectorXd::Zero(kNumKeys);
  for (const auto& [key, d] : entries) k[key] = d;
  return k;
}

double g_of(double d, double sigma) { return 1.0 - std::tanh(d / sigma); }

// A short all-silent song with parked demo tips and home nominal actions.
std::tuple<PianoStateTrajectory, std::vector<FingertipFrame>, std::vector<Eigen::VectorXd>>
tiny_episode(int frames) {
  PianoStateTrajectory song;
  song.rate_hz = 20.0;
  song.frames.resize(static_cast<std::size_t>(frames));
  std::vector<FingertipFrame> demo(static_cast<std::size_t>(frames));
  std::vector<Eigen::VectorXd> nominal(static_cast<std::size_t>(frames));
  for (int t = 0; t < frames; ++t) {
    demo[static_cast<std::size_t>(t)].t = t / song.rate_hz;
    demo[static_cast<std::size_t>(t)].tips = parked_tips();
    nominal[static_cast<std::size_t>(t)] = spec().home();
  }
  return {song, demo, nominal};
}

}  // namespace

TEST_SUITE("env") {
  TEST_CASE("reward shaping kernel matches 1 - tanh(d/sigma)") {
    const double sigma = 0.01;
    CHECK(reward_shaping(0.0, sigma) == 1.0);
    for (double d : {1e-4, 1e-3, 0.005, 0.01, 0.02, 0.1}) {
      CHECK(reward_shaping(d, sigma) == 1.0 - std::tanh(d / sigma));
      CHECK(reward_shaping(d, sigma) < 1.0);
      CHECK(reward_shaping(d, sigma) > 0.0);
    }
  }

  TEST_CASE("key press reward: all goal keys fully pressed, nothing else -> 1.0") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    const RewardBreakdown r =
        compute_reward(depressions_of({{40, 1.0}, {44, 1.0}}), goal_of({40, 44}), tips, tips, cfg);
    CHECK(std::abs(r.key_press - 1.0) < 1e-12);
    CHECK(!r.false_positive);
    CHECK(std::abs(r.mimic - 1.0) < 1e-12);
    CHECK(std::abs(r.total - 1.0) < 1e-12);
  }

  TEST_CASE("key press reward: goal keys pressed plus one spurious key -> 0.5") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    const RewardBreakdown r = compute_reward(depressions_of({{40, 1.0}, {44, 1.0}, {50, 0.8}}),
                                             goal_of({40, 44}), tips, tips, cfg);
    CHECK(r.false_positive);
    CHECK(std::abs(r.key_press - 0.5) < 1e-12);
  }

  TEST_CASE("key press reward: goal keys at partial depression") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    // Three goal keys held at depression 0.3: distance 0.7 per key, stacked
    // over the goal set -> d = 0.7 * sqrt(3).
    const RewardBreakdown r =
        compute_reward(depressions_of({{30, 0.3}, {35, 0.3}, {41, 0.3}}), goal_of({30, 35, 41}),
                       tips, tips, cfg);
    const double d = 0.7 * std::sqrt(3.0);
    const double expect = 0.5 * g_of(d, cfg.sigma_g) + 0.5;
    CHECK(!r.false_positive);  // 0.3 < press_threshold, so no spurious press
    CHECK(std::abs(r.key_press - expect) < 1e-12);
  }

  TEST_CASE("key press reward: empty goal with silent keyboard -> 1.0") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    const RewardBreakdown r =
        compute_reward(Eigen::VectorXd::Zero(kNumKeys), goal_of({}), tips, tips, cfg);
    CHECK(std::abs(r.key_press - 1.0) < 1e-12);
    CHECK(!r.false_positive);
  }

  TEST_CASE("false positive uses >= press_threshold on non-goal keys only") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    // Exactly at threshold counts as pressed.
    CHECK(compute_reward(depressions_of({{12, cfg.press_threshold}}), goal_of({}), tips, tips, cfg)
              .false_positive);
    // Just below does not.
    CHECK(!compute_reward(depressions_of({{12, cfg.press_threshold - 1e-9}}), goal_of({}), tips,
                          tips, cfg)
               .false_positive);
    // A goal key above threshold is not spurious.
    CHECK(!compute_reward(depressions_of({{12, 1.0}}), goal_of({12}), tips, tips, cfg)
               .false_positive);
  }

  TEST_CASE("mimic reward: perfect match -> 1.0") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    const RewardBreakdown r =
        compute_reward(Eigen::VectorXd::Zero(kNumKeys), goal_of({}), tips, tips, cfg);
    CHECK(std::abs(r.mimic - 1.0) < 1e-12);
  }

  TEST_CASE("mimic reward: one tip offset by sigma_g -> 1 - tanh(1)") {
    EnvConfig cfg;
    const auto demo = parked_tips();
    auto robot = demo;
    robot[3].z() += cfg.sigma_g;
    const RewardBreakdown r =
        compute_reward(Eigen::VectorXd::Zero(kNumKeys), goal_of({}), robot, demo, cfg);
    CHECK(std::abs(r.mimic - (1.0 - std::tanh(1.0))) < 1e-12);
  }

  TEST_CASE("mimic reward: all tips offset by 5 sigma_g -> below 0.01") {
    EnvConfig cfg;
    const auto demo = parked_tips();
    auto robot = demo;
    for (auto& tip : robot) tip.x() += 5.0 * cfg.sigma_g;
    const RewardBreakdown r =
        compute_reward(Eigen::VectorXd::Zero(kNumKeys), goal_of({}), robot, demo, cfg);
    CHECK(r.mimic < 0.01);
    CHECK(r.mimic >= 0.0);
  }

  TEST_CASE("total reward combines terms with configured weights") {
    EnvConfig cfg;
    const auto demo = parked_tips();
    auto robot = demo;
    robot[0].y() += 0.004;
    robot[7].z() -= 0.013;
    const RewardBreakdown r =
        compute_reward(depressions_of({{20, 0.6}, {64, 0.4}}), goal_of({20, 21}), robot, demo, cfg);
    CHECK(std::abs(r.total - (cfg.w_key * r.key_press + cfg.w_mimic * r.mimic)) < 1e-15);
    CHECK(r.total >= 0.0);
    CHECK(r.total <= 1.0);
  }

  TEST_CASE("key press reward recomputed from first principles on a mixed state") {
    EnvConfig cfg;
    const auto tips = parked_tips();
    // Goal keys at 0.9 and 0.55; a non-goal key at 0.2 (below threshold).
    const RewardBreakdown r = compute_reward(
        depressions_of({{40, 0.9}, {47, 0.55}, {60, 0.2}}), goal_of({40, 47}), tips, tips, cfg);
    const double d = std::sqrt(0.1 * 0.1 + 0.45 * 0.45);
    CHECK(std::abs(r.key_press - (0.5 * g_of(d, cfg.sigma_g) + 0.5)) < 1e-12);
  }

  TEST_CASE("key depressions: tip at key center maps height to depression fraction") {
    EnvConfig cfg;
    auto tips = parked_tips();
    tips[2] = tip_on_key(40, 0.5);
    const Eigen::VectorXd k = key_depressions(tips, geom(), cfg);
    CHECK(k[40] == doctest::Approx(0.5).epsilon(1e-12));
    double others = 0.0;
    for (int j = 0; j < kNumKeys; ++j)
      if (j != 40) others += std::abs(k[j]);
    CHECK(others == 0.0);
  }

  TEST_CASE("key depressions clamp to [0, 1]") {
    EnvConfig cfg;
    auto tips = parked_tips();
    tips[0] = tip_on_key(30, 1.0);
    tips[0].z() -= 0.003;  // below the keybed
    tips[1] = tip_on_key(50, 0.0);
    tips[1].z() += 0.004;  // hovering above the rest height
    const Eigen::VectorXd k = key_depressions(tips, geom(), cfg);
    CHECK(k[30] == 1.0);
    CHECK(k[50] == 0.0);
  }

  TEST_CASE("key depressions: deepest fingertip on a key wins") {
    EnvConfig cfg;
    auto tips = parked_tips();
    tips[4] = tip_on_key(44, 0.3);
    tips[5] = tip_on_key(44, 0.7);
    tips[5].y() += 0.002;  // still inside the footprint
    const Eigen::VectorXd k = key_depressions(tips, geom(), cfg);
    CHECK(k[44] == doctest::Approx(0.7).epsilon(1e-12));
  }

  TEST_CASE("key depressions: tip outside the footprint presses nothing") {
    EnvConfig cfg;
    const Key& c4 = geom().keys[39];

    auto tips = parked_tips();
    tips[0] = tip_on_key(39, 0.8);
    tips[0].x() = c4.x_front - 0.005;  // in front of the key
    CHECK(key_depressions(tips, geom(), cfg).cwiseAbs().sum() == 0.0);

    // Between the B3 and C4 pressable zones (no black key covers that gap).
    const Key& b3 = geom().keys[38];
    const double gap_y = 0.5 * ((b3.center_y + 0.5 * b3.y_extent) + (c4.center_y - 0.5 * c4.y_extent));
    tips[0] = Eigen::Vector3d(0.5 * (c4.x_front + c4.x_back), gap_y, 0.002);
    CHECK(key_depressions(tips, geom(), cfg).cwiseAbs().sum() == 0.0);
  }

  TEST_CASE("key depressions: black keys press in the back region only") {
    EnvConfig cfg;
    auto tips = parked_tips();
    tips[6] = tip_on_key(40, 0.5);  // C#4
    CHECK(geom().keys[40].black);
    Eigen::VectorXd k = key_depressions(tips, geom(), cfg);
    CHECK(k[40] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(k[39] == 0.0);
    CHECK(k[41] == 0.0);

    // Same lateral position but in the white front region: the black key's
    // footprint does not extend there, and the white gap sits right under it.
    tips[6].x() = 0.5 * (geom().keys[39].x_front + geom().keys[39].x_back);
    k = key_depressions(tips, geom(), cfg);
    CHECK(k.cwiseAbs().sum() == 0.0);
  }

  TEST_CASE("env config validation") {
    EnvConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.substeps_per_frame() == 25);

    EnvConfig bad = cfg;
    bad.substep_hz = 490.0;  // not an integer multiple of control_hz
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.key_travel = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.sigma_g = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.lookahead = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.w_key = 0.6;  // weights no longer sum to 1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("episode runs one step per song frame and then refuses to continue") {
    PianoEnv env(spec(), geom(), EnvConfig{});
    const auto [song, demo, nominal] = tiny_episode(4);
    env.reset(song, demo, nominal);
    CHECK(env.frame_count() == 4);
    CHECK(env.t() == 0);
    CHECK(!env.done());

    for (int t = 0; t < 4; ++t) {
      const auto out = env.step(nominal[static_cast<std::size_t>(t)]);
      CHECK(env.t() == t + 1);
      CHECK(out.done == (t == 3));
    }
    CHECK(env.done());
    CHECK(static_cast<int>(env.log().frames.size()) == 4);
    CHECK_THROWS_AS(env.step(nominal[0]), std::logic_error);
  }

  TEST_CASE("step tracks the clamped target with first-order dynamics") {
    EnvConfig cfg;
    PianoEnv env(spec(), geom(), cfg);
    const auto [song, demo, nominal] = tiny_episode(2);
    env.reset(song, demo, nominal);
    const Eigen::VectorXd q0 = env.q();

    // An interior target: the whole path from home stays inside the limits,
    // so the update has the closed form q_T = a + (q0 - a) (1 - alpha)^T.
    const Eigen::VectorXd lo = spec().lower_limits();
    const Eigen::VectorXd hi = spec().upper_limits();
    Eigen::VectorXd a = lo + 0.3 * (hi - lo);
    env.step(a);

    const double alpha = (1.0 / cfg.substep_hz) / cfg.tau_track;
    const double shrink = std::pow(1.0 - alpha, cfg.substeps_per_frame());
    const Eigen::VectorXd expect = a + (q0 - a) * shrink;
    CHECK((env.q() - expect).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("actions outside the limits are clamped before tracking") {
    EnvConfig cfg;
    PianoEnv env(spec(), geom(), cfg);
    const auto [song, demo, nominal] = tiny_episode(2);
    env.reset(song, demo, nominal);

    Eigen::VectorXd wild = Eigen::VectorXd::Constant(spec().total_dof(), 100.0);
    env.step(wild);
    const Eigen::VectorXd lo = spec().lower_limits();
    const Eigen::VectorXd hi = spec().upper_limits();
    for (int j = 0; j < spec().total_dof(); ++j) {
      CHECK(env.q()[j] >= lo[j] - 1e-12);
      CHECK(env.q()[j] <= hi[j] + 1e-12);
    }
    // The logged action is the clamped target, not the raw command.
    CHECK((env.log().frames.back().action - spec().clamp(wild)).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("halving the tracking time constant never worsens tracking accuracy") {
    const auto [song, demo, nominal] = tiny_episode(2);
    const Eigen::VectorXd lo = spec().lower_limits();
    const Eigen::VectorXd hi = spec().upper_limits();
    const Eigen::VectorXd a = lo + 0.7 * (hi - lo);

    auto gap_after_one_step = [&](double tau) {
      EnvConfig cfg;
      cfg.tau_track = tau;
      PianoEnv env(spec(), geom(), cfg);
      env.reset(song, demo, nominal);
      env.step(a);
      return (env.q() - spec().clamp(a)).norm();
    };

    double prev = gap_after_one_step(0.4);
    for (double tau : {0.2, 0.1, 0.05, 0.025, 0.0125, 0.000625}) {
      const double cur = gap_after_one_step(tau);
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
    // Far below the substep period the tracking becomes instantaneous.
    CHECK(gap_after_one_step(1e-9) == 0.0);
  }

  TEST_CASE("reset restores the exact initial state") {
    PianoEnv env(spec(), geom(), EnvConfig{});
    const auto [song, demo, nominal] = tiny_episode(3);

    const Eigen::VectorXd first = env.reset(song, demo, nominal).flatten();
    env.step(nominal[1]);
    env.step(nominal[2]);
    const Eigen::VectorXd again = env.reset(song, demo, nominal).flatten();
    CHECK((first - again).cwiseAbs().maxCoeff() == 0.0);
    CHECK(env.t() == 0);
    CHECK(!env.done());
    CHECK(env.log().frames.empty());
    CHECK(!env.reset_clamped());

    // Keys start at rest even though the initial pose is taken from nominal.
    CHECK(env.reset(song, demo, nominal).key_state.cwiseAbs().sum() == 0.0);
  }

  TEST_CASE("reset flags an out-of-limits initial pose") {
    PianoEnv env(spec(), geom(), EnvConfig{});
    auto [song, demo, nominal] = tiny_episode(2);
    nominal[0][0] = 5.0;  // far beyond the lateral slide range
    env.reset(song, demo, nominal);
    CHECK(env.reset_clamped());
    CHECK(env.q()[0] == spec().upper_limits()[0]);
  }

  TEST_CASE("reset validates frame counts and action sizes") {
    PianoEnv env(spec(), geom(), EnvConfig{});
    auto [song, demo, nominal] = tiny_episode(3);

    auto short_demo = demo;
    short_demo.pop_back();
    CHECK_THROWS_AS(env.reset(song, short_demo, nominal), std::invalid_argument);

    auto short_nominal = nominal;
    short_nominal.pop_back();
    CHECK_THROWS_AS(env.reset(song, demo, short_nominal), std::invalid_argument);

    auto bad_nominal = nominal;
    bad_nominal[1] = Eigen::VectorXd::Zero(spec().dof());  // missing the pedal slot
    CHECK_THROWS_AS(env.reset(song, demo, bad_nominal), std::invalid_argument);

    CHECK_THROWS_AS(env.reset(PianoStateTrajectory{}, {}, {}), std::invalid_argument);
  }

  TEST_CASE("observation flattening follows the documented layout") {
    EnvConfig cfg;
    cfg.lookahead = 3;
    PianoEnv env(spec(), geom(), cfg);
    auto [song, demo, nominal] = tiny_episode(5);
    song.frames[1].keys[40] = 1;
    song.frames[2].keys[44] = 1;
    song.frames[2].pedal = 1;

    const Observation obs = env.reset(song, demo, nominal);
    const Eigen::VectorXd v = obs.flatten();
    const int dof = spec().dof();
    REQUIRE(v.size() == Observation::flat_size(dof, cfg.lookahead));

    Eigen::Index at = 0;
    CHECK((v.segment(at, dof) - obs.q).cwiseAbs().maxCoeff() == 0.0);
    at += dof;
    CHECK((v.segment(at, dof) - obs.qdot).cwiseAbs().maxCoeff() == 0.0);
    at += dof;
    CHECK(v[at] == obs.pedal);
    at += 1;
    CHECK((v.segment(at, kNumKeys) - obs.key_state).cwiseAbs().maxCoeff() == 0.0);
    at += kNumKeys;
    REQUIRE(obs.goals.size() == 3);
    for (const auto& g : obs.goals) {
      for (int k = 0; k < kNumKeys; ++k) {
        CHECK(v[at++] == double(g.keys[static_cast<std::size_t>(k)]));
      }
      CHECK(v[at++] == double(g.pedal));
    }
    for (const auto& tip : obs.demo_tips) {
      CHECK(v[at++] == tip.x());
      CHECK(v[at++] == tip.y());
      CHECK(v[at++] == tip.z());
    }
    CHECK((v.segment(at, dof + 1) - obs.nominal_next).cwiseAbs().maxCoeff() == 0.0);
    at += dof + 1;
    CHECK(at == v.size());

    // The first window starts at the frame the next step is judged against.
    CHECK(obs.goals[0].keys[40] == 0);
    CHECK(obs.goals[1].keys[40] == 1);
    CHECK(obs.goals[2].keys[44] == 1);
    CHECK(obs.goals[2].pedal == 1);

    // After one step the window slides forward by one frame.
    const Observation next = env.step(nominal[0]).obs;
    CHECK(next.goals[0].keys[40] == 1);
    CHECK(next.goals[1].keys[44] == 1);
  }

  TEST_CASE("episode log round trips through jsonl") {
    PianoEnv env(spec(), geom(), EnvConfig{});
    auto [song, demo, nominal] = tiny_episode(3);
    song.frames[1].keys[60] = 1;
    song.frames[2].pedal = 1;
    env.reset(song, demo, nominal);
    Eigen::VectorXd a = nominal[0];
    a[3] = 0.4;
    a[spec().dof()] = 1.0;  // press the pedal
    env.step(a);
    env.step(nominal[1]);
    env.step(nominal[2]);

    testutil::TempDir tmp;
    const std::string path = tmp.file("episode.jsonl");
    env.log().write_jsonl(path);
    const EpisodeLog back = EpisodeLog::read_jsonl(path);

    REQUIRE(back.frames.size() == env.log().frames.size());
    CHECK(back.rate_hz == env.log().rate_hz);
    CHECK(back.press_threshold == env.log().press_threshold);
    for (std::size_t i = 0; i < back.frames.size(); ++i) {
      const auto& lhs = env.log().frames[i];
      const auto& rhs = back.frames[i];
      CHECK(lhs.t == rhs.t);
      CHECK((lhs.q - rhs.q).cwiseAbs().maxCoeff() == 0.0);
      CHECK((lhs.action - rhs.action).cwiseAbs().maxCoeff() == 0.0);
      CHECK((lhs.key_state - rhs.key_state).cwiseAbs().maxCoeff() == 0.0);
      for (std::size_t f = 0; f < kNumFingers; ++f)
        CHECK((lhs.tips[f] - rhs.tips[f]).cwiseAbs().maxCoeff() == 0.0);
      CHECK(lhs.goal.keys == rhs.goal.keys);
      CHECK(lhs.goal.pedal == rhs.goal.pedal);
      CHECK(lhs.reward.key_press == rhs.reward.key_press);
      CHECK(lhs.reward.mimic == rhs.reward.mimic);
      CHECK(lhs.reward.total == rhs.reward.total);
      CHECK(lhs.reward.false_positive == rhs.reward.false_positive);
    }
    CHECK(back.total_reward() == env.log().total_reward());

    CHECK_THROWS(EpisodeLog::read_jsonl(tmp.file("missing.jsonl")));
  }

  TEST_CASE("total reward sums frame totals") {
    EpisodeLog log;
    for (double v : {0.25, 0.5, 1.0}) {
      FrameRecord f;
      f.reward.total = v;
      log.frames.push_back(f);
    }
    CHECK(log.total_reward() == 1.75);
  }

  TEST_CASE("pressed trajectory thresholds depressions and reads the pedal from q") {
    EpisodeLog log;
    log.rate_hz = 20.0;
    log.press_threshold = 0.5;
    for (int t = 0; t < 2; ++t) {
      FrameRecord f;
      f.t = t;
      f.q = Eigen::VectorXd::Zero(47);
      f.key_state = Eigen::VectorXd::Zero(kNumKeys);
      log.frames.push_back(f);
    }
    log.frames[0].key_state[40] = 0.5;   // exactly at threshold -> pressed
    log.frames[0].key_state[41] = 0.49;  // below -> not pressed
    log.frames[1].key_state[80] = 1.0;
    log.frames[1].q[46] = 1.0;  // pedal down

    const PianoStateTrajectory traj = log.pressed_trajectory();
    REQUIRE(traj.frames.size() == 2);
    CHECK(traj.rate_hz == 20.0);
    CHECK(traj.frames[0].keys[40] == 1);
    CHECK(traj.frames[0].keys[41] == 0);
    CHECK(traj.frames[0].pedal == 0);
    CHECK(traj.frames[1].keys[80] == 1);
    CHECK(traj.frames[1].pedal == 1);
  }

  TEST_CASE("environment steps are deterministic") {
    const auto [song, demo, nominal] = tiny_episode(3);
    auto run = [&] {
      PianoEnv env(spec(), geom(), EnvConfig{});
      env.reset(song, demo, nominal);
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec().total_dof());
      double reward = 0.0;
      for (int t = 0; t < 3; ++t) {
        Eigen::VectorXd a = nominal[static_cast<std::size_t>(t)];
        a[7] = 0.3 + 0.1 * t;
        const auto out = env.step(a);
        sum += env.q();
        reward += out.reward.total;
      }
      return std::make_pair(sum, reward);
    };
    const auto [q1, r1] = run();
    const auto [q2, r2] = run();
    CHECK((q1 - q2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r1 == r2);
  }
}
