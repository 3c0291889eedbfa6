// Micro-benchmark comparing the serial reference path (jobs=1) against the
// OpenMP path (jobs=N) for the three data-parallel kernels, and checking that
// both produce bitwise-identical results.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pianomime/cem.hpp"
#include "pianomime/codec.hpp"
#include "pianomime/common.hpp"
#include "pianomime/env.hpp"
#include "pianomime/parallel.hpp"
#include "pianomime/residual.hpp"
#include "pianomime/sdf.hpp"
#include "pianomime/synth.hpp"

using namespace pianomime;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double best_ms(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = Clock::now();
    fn();
    auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const char* name, double serial_ms, double par_ms, bool identical) {
  std::printf("%-18s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms, par_ms,
              serial_ms / par_ms, identical ? "identical" : "DIFFER");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  int reps = 3;
  int sdf_n = 50000;
  int codec_batch = 2048;
  int rollouts = 16;
  app.add_option("--jobs", jobs, "thread count for the parallel runs");
  app.add_option("--reps", reps, "repetitions (best-of)");
  app.add_option("--sdf-queries", sdf_n, "sdf batch size");
  app.add_option("--codec-batch", codec_batch, "codec gradient batch size");
  app.add_option("--rollouts", rollouts, "population rollouts");
  CLI11_PARSE(app, argc, argv);
  if (jobs < 1) jobs = 1;

  KeyGeometry geom = KeyGeometry::standard_piano();
  HandModelSpec spec = HandModelSpec::default_spec();
  Rng rng(12345);

  std::printf("parallel runs use %d thread(s)\n", jobs);
  std::printf("%-18s %13s %13s %9s   %s\n", "kernel", "serial", "parallel", "speedup", "check");

  {  // --- SDF batch ---
    PianoState state;
    state.keys[30] = state.keys[34] = state.keys[37] = true;
    BBox box = geom.bounding_box().inflated(0.2);
    std::vector<Eigen::Vector3d> queries;
    queries.reserve(static_cast<std::size_t>(sdf_n));
    for (int i = 0; i < sdf_n; ++i) {
      queries.emplace_back(rng.uniform(box.lo.x(), box.hi.x()), rng.uniform(box.lo.y(), box.hi.y()),
                           rng.uniform(box.lo.z(), box.hi.z()));
    }
    std::vector<double> serial_out, par_out;
    double s = best_ms(reps, [&] { serial_out = piano_sdf_batch(queries, state, geom, 2.0, 1); });
    double p = best_ms(reps, [&] { par_out = piano_sdf_batch(queries, state, geom, 2.0, jobs); });
    row("sdf-batch", s, p, serial_out == par_out);
  }

  {  // --- codec gradient ---
    CodecSpec cs;
    GoalCodec codec(cs, geom);
    Eigen::VectorXd params(codec.n_params());
    for (int i = 0; i < params.size(); ++i) params[i] = 0.1 * rng.normal();
    codec.set_params(params);
    std::vector<GoalCodec::Sample> batch(static_cast<std::size_t>(codec_batch));
    for (auto& smp : batch) {
      PianoState st;
      st.keys[rng.uniform_int(kNumKeys)] = true;
      smp.keys = GoalCodec::keys_vector(st);
      const BBox& box = codec.query_box();
      smp.query = Eigen::Vector3d(rng.uniform(box.lo.x(), box.hi.x()),
                                  rng.uniform(box.lo.y(), box.hi.y()),
                                  rng.uniform(box.lo.z(), box.hi.z()));
      smp.sdf = piano_sdf(smp.query, st, geom, cs.d_empty);
    }
    Eigen::VectorXd gs(codec.n_params()), gp(codec.n_params());
    double ls = 0.0, lp = 0.0;
    double s = best_ms(reps, [&] { ls = codec.loss_and_grad(batch, gs, 1); });
    double p = best_ms(reps, [&] { lp = codec.loss_and_grad(batch, gp, jobs); });
    row("codec-grad", s, p, ls == lp && gs == gp);
  }

  {  // --- population rollouts ---
    SynthConfig sc;
    sc.notes_per_hand = 4;
    sc.seed = 99;
    SynthSong song = synthesize_song(spec, geom, sc, "bench");
    EnvBundle bundle{spec, geom, EnvConfig{}, song.song, song.demo, song.q};
    ResidualFeaturizer feat;
    std::vector<ResidualPolicy> pop;
    for (int i = 0; i < rollouts; ++i) {
      ResidualPolicy pol = ResidualPolicy::zeros(feat);
      for (int k = 0; k < pol.theta.size(); ++k) pol.theta[k] = 0.005 * rng.normal();
      pop.push_back(pol);
    }
    std::vector<double> rs(pop.size()), rp(pop.size());
    double s = best_ms(reps, [&] {
      parallel_for(pop.size(), 1, [&](std::size_t i) {
        rs[i] = rollout_residual(bundle, pop[i]).total_reward();
      });
    });
    double p = best_ms(reps, [&] {
      parallel_for(pop.size(), jobs, [&](std::size_t i) {
        rp[i] = rollout_residual(bundle, pop[i]).total_reward();
      });
    });
    row("rollout-batch", s, p, rs == rp);
  }

  return 0;
}
