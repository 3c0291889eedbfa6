#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pianomime/common.hpp"
#include "json.hpp"

namespace pianomime {

// Fully connected network with tanh hidden activations and a linear output
// layer. Parameters live in one flat vector (per layer: column-major W, then
// b) so optimizers and finite-difference checks can treat the network as a
// plain function of its parameter vector.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int n_params() const;

  void init_xavier(Rng& rng);

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // Activations recorded by forward_traced for use in backward.
  struct Trace {
    Eigen::VectorXd input;
    std::vector<Eigen::VectorXd> post;  // activation outputs per layer
  };
  Eigen::VectorXd forward_traced(const Eigen::VectorXd& x, Trace& trace) const;

  // Accumulates dLoss/dParams into grad (size n_params) given dLoss/dOutput;
  // optionally produces dLoss/dInput.
  void backward(const Trace& trace, const Eigen::VectorXd& d_out, Eigen::VectorXd& grad,
                Eigen::VectorXd* d_input = nullptr) const;

  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& p);

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  std::vector<int> widths_;
  std::vector<Eigen::MatrixXd> W_;
  std::vector<Eigen::VectorXd> b_;
};

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  void reset();

 private:
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

// Per-coordinate z-score normalization fitted on a dataset; standard
// deviations are floored to keep the map invertible.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static Normalizer fit(const std::vector<Eigen::VectorXd>& data, double std_floor = 1e-6);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::VectorXd unapply(const Eigen::VectorXd& y) const;

  nlohmann::json to_json() const;
  static Normalizer from_json(const nlohmann::json& j);
};

}  // namespace pianomime
