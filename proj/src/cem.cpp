#include "pianomime/cem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "pianomime/common.hpp"
#include "pianomime/parallel.hpp"

namespace pianomime {

CemResult cem_optimize(int dim, const std::function<double(const Eigen::VectorXd&)>& objective,
                       const CemConfig& cfg, const Eigen::VectorXd& init_mean) {
  if (dim < 1) throw CemError("dimension must be >= 1");
  if (cfg.population < 2) throw CemError("population must be >= 2");
  if (cfg.elites < 1 || cfg.elites > cfg.population)
    throw CemError("elites must be in [1, population]");
  if (cfg.init_std <= 0) throw CemError("init_std must be positive");

  Eigen::VectorXd mu = init_mean.size() == 0 ? Eigen::VectorXd::Zero(dim) : init_mean;
  if (mu.size() != dim) throw CemError("init_mean dimension mismatch");
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(dim, cfg.init_std);

  Rng rng(cfg.seed);
  CemResult result;
  result.best_params = mu;
  result.best_return = -std::numeric_limits<double>::infinity();

  std::vector<Eigen::VectorXd> samples(static_cast<std::size_t>(cfg.population));
  std::vector<double> returns(static_cast<std::size_t>(cfg.population));

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int i = 0; i < cfg.population; ++i) {
      Eigen::VectorXd theta(dim);
      for (int d = 0; d < dim; ++d) theta[d] = mu[d] + sigma[d] * rng.normal();
      samples[static_cast<std::size_t>(i)] = std::move(theta);
    }

    parallel_for(static_cast<std::size_t>(cfg.population), cfg.jobs, [&](std::size_t i) {
      returns[i] = objective(samples[i]);
    });

    for (int i = 0; i < cfg.population; ++i) {
      if (!std::isfinite(returns[static_cast<std::size_t>(i)]))
        throw CemError("population member " + std::to_string(i) +
                       " returned a non-finite objective");
    }

    std::vector<int> order(static_cast<std::size_t>(cfg.population));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return returns[static_cast<std::size_t>(a)] > returns[static_cast<std::size_t>(b)];
    });

    Eigen::VectorXd new_mu = Eigen::VectorXd::Zero(dim);
    for (int e = 0; e < cfg.elites; ++e)
      new_mu += samples[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])];
    new_mu /= cfg.elites;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    for (int e = 0; e < cfg.elites; ++e) {
      const Eigen::VectorXd d =
          samples[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])] - new_mu;
      var += d.cwiseProduct(d);
    }
    var /= cfg.elites;
    mu = new_mu;
    sigma = var.cwiseSqrt().cwiseMax(cfg.std_floor);

    const int top = order[0];
    const double iter_best = returns[static_cast<std::size_t>(top)];
    if (iter_best > result.best_return) {
      result.best_return = iter_best;
      result.best_params = samples[static_cast<std::size_t>(top)];
    }

    double elite_mean = 0.0;
    for (int e = 0; e < cfg.elites; ++e)
      elite_mean += returns[static_cast<std::size_t>(order[static_cast<std::size_t>(e)])];
    elite_mean /= cfg.elites;

    result.curve.push_back(
        {iter, result.best_return, iter_best, elite_mean, sigma.mean()});
  }
  return result;
}

ResidualTrainResult train_residual_cem(const EnvBundle& bundle, const ResidualFeaturizer& feat,
                                       const CemConfig& cfg) {
  ResidualPolicy proto = ResidualPolicy::zeros(feat);
  const auto objective = [&](const Eigen::VectorXd& theta) {
    ResidualPolicy p = proto;
    p.theta = theta;
    return rollout_residual(bundle, p).total_reward();
  };

  const CemResult res = cem_optimize(proto.dim(), objective, cfg);
  ResidualTrainResult out;
  out.policy = proto;
  out.policy.theta = res.best_params;
  out.best_return = res.best_return;
  out.curve = res.curve;
  return out;
}

void save_cem_curve_csv(const std::string& path, const std::vector<CemIterate>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "iter,best_return,iter_best,elite_mean,mean_std\n";
  char buf[160];
  for (const auto& c : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.9f,%.9f,%.9f\n", c.iter, c.best_return,
                  c.iter_best, c.elite_mean, c.mean_std);
    out << buf;
  }
}

}  // namespace pianomime
