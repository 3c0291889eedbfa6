#include "pianomime/codec.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "pianomime/parallel.hpp"

namespace pianomime {

namespace {
// Fixed accumulation block count, independent of the thread count, so that
// floating point reduction order never changes.
constexpr std::size_t kGradBlocks = 16;
}  // namespace

void CodecSpec::validate() const {
  if (encoder_widths.size() < 2 || encoder_widths.front() != kNumKeys)
    throw std::invalid_argument("CodecSpec: encoder must map the 88 key flags");
  if (n_freq < 1) throw std::invalid_argument("CodecSpec: n_freq must be >= 1");
  if (d_empty <= 0) throw std::invalid_argument("CodecSpec: d_empty must be positive");
  if (lr < 0) throw std::invalid_argument("CodecSpec: lr must be >= 0");
  if (epochs < 0) throw std::invalid_argument("CodecSpec: epochs must be >= 0");
  if (queries_per_state < 1) throw std::invalid_argument("CodecSpec: queries_per_state must be >= 1");
  if (batch < 1) throw std::invalid_argument("CodecSpec: batch must be >= 1");
}

GoalCodec::GoalCodec(CodecSpec spec, const KeyGeometry& geom) : spec_(std::move(spec)) {
  spec_.validate();
  box_ = geom.bounding_box().inflated(spec_.bbox_inflation);
  encoder_ = Mlp(spec_.encoder_widths);
  std::vector<int> dec_widths;
  dec_widths.push_back(encoder_.output_dim() + 6 * spec_.n_freq);
  for (int w : spec_.decoder_hidden) dec_widths.push_back(w);
  dec_widths.push_back(1);
  decoder_ = Mlp(dec_widths);
}

Eigen::VectorXd GoalCodec::keys_vector(const PianoState& state) {
  Eigen::VectorXd v(kNumKeys);
  for (int k = 0; k < kNumKeys; ++k) v[k] = state.keys[static_cast<std::size_t>(k)] ? 1.0 : 0.0;
  return v;
}

Eigen::VectorXd GoalCodec::encode(const PianoState& state) const {
  if (!trained_) throw std::logic_error("GoalCodec::encode: codec has not been trained");
  return encoder_.forward(keys_vector(state));
}

double GoalCodec::predict_latent(const Eigen::VectorXd& latent, const Eigen::Vector3d& query) const {
  Eigen::VectorXd in(decoder_.input_dim());
  in << latent, positional_encoding(query, spec_.n_freq, box_);
  return decoder_.forward(in)[0];
}

double GoalCodec::predict(const PianoState& state, const Eigen::Vector3d& query) const {
  if (!trained_) throw std::logic_error("GoalCodec::predict: codec has not been trained");
  return predict_latent(encoder_.forward(keys_vector(state)), query);
}

double GoalCodec::loss_and_grad(std::span<const Sample> batch, Eigen::VectorXd& grad,
                                int jobs) const {
  if (batch.empty()) throw std::invalid_argument("loss_and_grad: empty batch");
  const int n_enc = encoder_.n_params();
  const int n_all = n_params();
  grad = Eigen::VectorXd::Zero(n_all);

  const std::size_t blocks = std::min<std::size_t>(kGradBlocks, batch.size());
  std::vector<Eigen::VectorXd> block_grad(blocks, Eigen::VectorXd::Zero(n_all));
  std::vector<double> block_loss(blocks, 0.0);

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  parallel_for(blocks, jobs, [&](std::size_t bi) {
    Eigen::VectorXd& g = block_grad[bi];
    Eigen::Map<Eigen::VectorXd> g_enc(g.data(), n_enc);
    Eigen::Map<Eigen::VectorXd> g_dec(g.data() + n_enc, n_all - n_enc);
    Eigen::VectorXd g_enc_v(n_enc), g_dec_v(n_all - n_enc);

    for (std::size_t i = bi; i < batch.size(); i += blocks) {
      const Sample& s = batch[i];
      Mlp::Trace enc_trace, dec_trace;
      const Eigen::VectorXd z = encoder_.forward_traced(s.keys, enc_trace);
      Eigen::VectorXd dec_in(decoder_.input_dim());
      dec_in << z, positional_encoding(s.query, spec_.n_freq, box_);
      const double pred = decoder_.forward_traced(dec_in, dec_trace)[0];

      const double err = pred - s.sdf;
      block_loss[bi] += err * err * inv_b;

      Eigen::VectorXd d_out(1);
      d_out[0] = 2.0 * err * inv_b;
      g_dec_v.setZero();
      Eigen::VectorXd d_dec_in;
      decoder_.backward(dec_trace, d_out, g_dec_v, &d_dec_in);
      g_dec += g_dec_v;

      g_enc_v.setZero();
      encoder_.backward(enc_trace, d_dec_in.head(z.size()), g_enc_v);
      g_enc += g_enc_v;
    }
  });

  double loss = 0.0;
  for (std::size_t bi = 0; bi < blocks; ++bi) {
    grad += block_grad[bi];
    loss += block_loss[bi];
  }
  return loss;
}

Eigen::VectorXd GoalCodec::params() const {
  Eigen::VectorXd p(n_params());
  p << encoder_.flat_params(), decoder_.flat_params();
  return p;
}

void GoalCodec::set_params(const Eigen::VectorXd& p) {
  if (p.size() != n_params()) throw std::invalid_argument("GoalCodec::set_params: size mismatch");
  encoder_.set_flat_params(p.head(encoder_.n_params()));
  decoder_.set_flat_params(p.tail(decoder_.n_params()));
}

void GoalCodec::save_json(const std::string& path) const {
  nlohmann::json j;
  j["spec"] = {{"encoder_widths", spec_.encoder_widths},
               {"decoder_hidden", spec_.decoder_hidden},
               {"n_freq", spec_.n_freq},
               {"d_empty", spec_.d_empty},
               {"bbox_inflation", spec_.bbox_inflation},
               {"lr", spec_.lr},
               {"epochs", spec_.epochs},
               {"queries_per_state", spec_.queries_per_state},
               {"batch", spec_.batch},
               {"seed", spec_.seed},
               {"jobs", spec_.jobs}};
  j["box"] = {{"lo", {box_.lo.x(), box_.lo.y(), box_.lo.z()}},
              {"hi", {box_.hi.x(), box_.hi.y(), box_.hi.z()}}};
  j["trained"] = trained_;
  j["encoder"] = encoder_.to_json();
  j["decoder"] = decoder_.to_json();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << '\n';
}

GoalCodec GoalCodec::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  GoalCodec c;
  const auto& s = j.at("spec");
  c.spec_.encoder_widths = s.at("encoder_widths").get<std::vector<int>>();
  c.spec_.decoder_hidden = s.at("decoder_hidden").get<std::vector<int>>();
  c.spec_.n_freq = s.at("n_freq").get<int>();
  c.spec_.d_empty = s.at("d_empty").get<double>();
  c.spec_.bbox_inflation = s.at("bbox_inflation").get<double>();
  c.spec_.lr = s.at("lr").get<double>();
  c.spec_.epochs = s.at("epochs").get<int>();
  c.spec_.queries_per_state = s.at("queries_per_state").get<int>();
  c.spec_.batch = s.at("batch").get<int>();
  c.spec_.seed = s.at("seed").get<std::uint64_t>();
  c.spec_.jobs = s.at("jobs").get<int>();
  const auto& b = j.at("box");
  for (int d = 0; d < 3; ++d) {
    c.box_.lo[d] = b.at("lo")[static_cast<std::size_t>(d)].get<double>();
    c.box_.hi[d] = b.at("hi")[static_cast<std::size_t>(d)].get<double>();
  }
  c.trained_ = j.at("trained").get<bool>();
  c.encoder_ = Mlp::from_json(j.at("encoder"));
  c.decoder_ = Mlp::from_json(j.at("decoder"));
  return c;
}

struct CodecTrainer {
  static std::vector<CodecTrainPoint> run(GoalCodec& codec, std::span<const PianoState> states,
                                          const KeyGeometry& geom) {
    const CodecSpec& spec = codec.spec_;
    if (states.empty()) throw std::invalid_argument("train_goal_codec: no states");

    Rng rng(spec.seed);
    codec.encoder_.init_xavier(rng);
    codec.decoder_.init_xavier(rng);

    Eigen::VectorXd params = codec.params();
    Adam adam;
    adam.lr = spec.lr;

    std::vector<GoalCodec::Sample> samples;
    samples.reserve(states.size() * static_cast<std::size_t>(spec.queries_per_state));
    std::vector<CodecTrainPoint> curve;

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
      samples.clear();
      for (const auto& state : states) {
        const Eigen::VectorXd keys = GoalCodec::keys_vector(state);
        for (int qi = 0; qi < spec.queries_per_state; ++qi) {
          Eigen::Vector3d q;
          for (int d = 0; d < 3; ++d) q[d] = rng.uniform(codec.box_.lo[d], codec.box_.hi[d]);
          samples.push_back({keys, q, piano_sdf(q, state, geom, spec.d_empty)});
        }
      }
      // Fisher-Yates shuffle with the training stream.
      for (std::size_t i = samples.size(); i > 1; --i)
        std::swap(samples[i - 1], samples[static_cast<std::size_t>(rng.uniform_int(i))]);

      double epoch_loss = 0.0;
      std::size_t batches = 0;
      for (std::size_t at = 0; at < samples.size(); at += static_cast<std::size_t>(spec.batch)) {
        const std::size_t len = std::min<std::size_t>(spec.batch, samples.size() - at);
        Eigen::VectorXd grad;
        epoch_loss += codec.loss_and_grad({samples.data() + at, len}, grad, spec.jobs);
        adam.step(params, grad);
        codec.set_params(params);
        ++batches;
      }
      curve.push_back({epoch, batches > 0 ? epoch_loss / static_cast<double>(batches) : 0.0});
    }
    codec.trained_ = true;
    return curve;
  }
};

std::vector<CodecTrainPoint> train_goal_codec(GoalCodec& codec,
                                              std::span<const PianoState> states,
                                              const KeyGeometry& geom) {
  return CodecTrainer::run(codec, states, geom);
}

}  // namespace pianomime
