#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pianomime/residual.hpp"

namespace pianomime {

class CemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CemConfig {
  int population = 64;
  int elites = 8;
  int iterations = 50;
  double init_std = 0.003;
  double std_floor = 1e-4;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct CemIterate {
  int iter = 0;
  double best_return = 0.0;   // best seen so far, monotone
  double iter_best = 0.0;     // best of this population
  double elite_mean = 0.0;
  double mean_std = 0.0;
};

struct CemResult {
  Eigen::VectorXd best_params;
  double best_return = 0.0;
  std::vector<CemIterate> curve;
};

// Cross-entropy method over a diagonal Gaussian search distribution, mean
// initialized at init_mean (zeros if empty). Samples are drawn serially from
// a seeded generator; evaluations run in parallel with results written to
// indexed slots, so the outcome is independent of the thread count. Ties in
// the elite ranking break toward the lower population index. Throws CemError
// if an objective value is not finite.
CemResult cem_optimize(int dim, const std::function<double(const Eigen::VectorXd&)>& objective,
                       const CemConfig& cfg, const Eigen::VectorXd& init_mean = {});

struct ResidualTrainResult {
  ResidualPolicy policy;
  double best_return = 0.0;
  std::vector<CemIterate> curve;
};

// Optimizes residual policy weights for one song by episodic CEM on the
// total episode reward.
ResidualTrainResult train_residual_cem(const EnvBundle& bundle, const ResidualFeaturizer& feat,
                                       const CemConfig& cfg);

void save_cem_curve_csv(const std::string& path, const std::vector<CemIterate>& curve);

}  // namespace pianomime
