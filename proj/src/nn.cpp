#include "pianomime/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace pianomime {

Mlp::Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (int w : widths_)
    if (w < 1) throw std::invalid_argument("Mlp: widths must be positive");
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    W_.emplace_back(Eigen::MatrixXd::Zero(widths_[l + 1], widths_[l]));
    b_.emplace_back(Eigen::VectorXd::Zero(widths_[l + 1]));
  }
}

int Mlp::n_params() const {
  int n = 0;
  for (std::size_t l = 0; l < W_.size(); ++l)
    n += static_cast<int>(W_[l].size() + b_[l].size());
  return n;
}

void Mlp::init_xavier(Rng& rng) {
  for (std::size_t l = 0; l < W_.size(); ++l) {
    const double scale = std::sqrt(2.0 / (W_[l].rows() + W_[l].cols()));
    for (Eigen::Index c = 0; c < W_[l].cols(); ++c)
      for (Eigen::Index r = 0; r < W_[l].rows(); ++r) W_[l](r, c) = scale * rng.normal();
    b_[l].setZero();
  }
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    a = (W_[l] * a + b_[l]).eval();
    if (l + 1 < W_.size()) a = a.array().tanh().matrix();
  }
  return a;
}

Eigen::VectorXd Mlp::forward_traced(const Eigen::VectorXd& x, Trace& trace) const {
  if (x.size() != input_dim()) throw std::invalid_argument("Mlp::forward: input size mismatch");
  trace.input = x;
  trace.post.resize(W_.size());
  Eigen::VectorXd a = x;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    a = (W_[l] * a + b_[l]).eval();
    if (l + 1 < W_.size()) a = a.array().tanh().matrix();
    trace.post[l] = a;
  }
  return a;
}

void Mlp::backward(const Trace& trace, const Eigen::VectorXd& d_out, Eigen::VectorXd& grad,
                   Eigen::VectorXd* d_input) const {
  if (grad.size() != n_params()) throw std::invalid_argument("Mlp::backward: grad size mismatch");
  if (d_out.size() != output_dim())
    throw std::invalid_argument("Mlp::backward: output gradient size mismatch");

  // Offsets of each layer's block in the flat parameter vector.
  std::vector<int> offsets(W_.size());
  int at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    offsets[l] = at;
    at += static_cast<int>(W_[l].size() + b_[l].size());
  }

  Eigen::VectorXd dz = d_out;
  for (std::size_t li = W_.size(); li-- > 0;) {
    // The output layer is linear; hidden layers apply tanh after the affine
    // map, so dz picks up the tanh derivative 1 - a^2.
    if (li + 1 < W_.size()) {
      const Eigen::VectorXd& a = trace.post[li];
      dz = dz.cwiseProduct((1.0 - a.array().square()).matrix());
    }
    const Eigen::VectorXd& prev = li == 0 ? trace.input : trace.post[li - 1];

    Eigen::Map<Eigen::MatrixXd> dW(grad.data() + offsets[li], W_[li].rows(), W_[li].cols());
    Eigen::Map<Eigen::VectorXd> db(grad.data() + offsets[li] + W_[li].size(), b_[li].size());
    dW.noalias() += dz * prev.transpose();
    db += dz;

    if (li > 0 || d_input != nullptr) {
      const Eigen::VectorXd da = W_[li].transpose() * dz;
      if (li == 0) {
        if (d_input) *d_input = da;
      } else {
        dz = da;
      }
    }
  }
}

Eigen::VectorXd Mlp::flat_params() const {
  Eigen::VectorXd p(n_params());
  int at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    Eigen::Map<Eigen::MatrixXd>(p.data() + at, W_[l].rows(), W_[l].cols()) = W_[l];
    at += static_cast<int>(W_[l].size());
    p.segment(at, b_[l].size()) = b_[l];
    at += static_cast<int>(b_[l].size());
  }
  return p;
}

void Mlp::set_flat_params(const Eigen::VectorXd& p) {
  if (p.size() != n_params()) throw std::invalid_argument("Mlp::set_flat_params: size mismatch");
  int at = 0;
  for (std::size_t l = 0; l < W_.size(); ++l) {
    W_[l] = Eigen::Map<const Eigen::MatrixXd>(p.data() + at, W_[l].rows(), W_[l].cols());
    at += static_cast<int>(W_[l].size());
    b_[l] = p.segment(at, b_[l].size());
    at += static_cast<int>(b_[l].size());
  }
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["widths"] = widths_;
  auto& params = j["params"] = nlohmann::json::array();
  const Eigen::VectorXd p = flat_params();
  for (Eigen::Index i = 0; i < p.size(); ++i) params.push_back(p[i]);
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net(j.at("widths").get<std::vector<int>>());
  const auto& params = j.at("params");
  Eigen::VectorXd p(static_cast<Eigen::Index>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = params[i].get<double>();
  net.set_flat_params(p);
  return net;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (params.size() != grad.size()) throw std::invalid_argument("Adam::step: size mismatch");
  if (m_.size() != params.size()) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
    t_ = 0;
  }
  ++t_;
  m_ = beta1 * m_ + (1.0 - beta1) * grad;
  v_ = beta2 * v_ + (1.0 - beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  params -= lr * (m_ / bc1).cwiseQuotient(((v_ / bc2).cwiseSqrt().array() + eps).matrix());
}

void Adam::reset() {
  m_.resize(0);
  v_.resize(0);
  t_ = 0;
}

Normalizer Normalizer::fit(const std::vector<Eigen::VectorXd>& data, double std_floor) {
  if (data.empty()) throw std::invalid_argument("Normalizer::fit: empty dataset");
  const Eigen::Index dim = data.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& x : data) {
    if (x.size() != dim) throw std::invalid_argument("Normalizer::fit: inconsistent dimensions");
    mean += x;
  }
  mean /= static_cast<double>(data.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& x : data) var += (x - mean).cwiseProduct(x - mean);
  var /= static_cast<double>(data.size());

  Normalizer n;
  n.mean = mean;
  n.std = var.cwiseSqrt().cwiseMax(std_floor);
  return n;
}

Eigen::VectorXd Normalizer::apply(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(std);
}

Eigen::VectorXd Normalizer::unapply(const Eigen::VectorXd& y) const {
  return y.cwiseProduct(std) + mean;
}

nlohmann::json Normalizer::to_json() const {
  nlohmann::json j;
  auto& m = j["mean"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mean.size(); ++i) m.push_back(mean[i]);
  auto& s = j["std"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < std.size(); ++i) s.push_back(std[i]);
  return j;
}

Normalizer Normalizer::from_json(const nlohmann::json& j) {
  Normalizer n;
  const auto& m = j.at("mean");
  const auto& s = j.at("std");
  n.mean.resize(static_cast<Eigen::Index>(m.size()));
  n.std.resize(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < m.size(); ++i) n.mean[static_cast<Eigen::Index>(i)] = m[i].get<double>();
  for (std::size_t i = 0; i < s.size(); ++i) n.std[static_cast<Eigen::Index>(i)] = s[i].get<double>();
  return n;
}

}  // namespace pianomime
