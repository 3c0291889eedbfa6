#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "pianomime/geometry.hpp"
#include "pianomime/nn.hpp"
#include "pianomime/piano_state.hpp"
#include "pianomime/sdf.hpp"

namespace pianomime {

struct CodecSpec {
  std::vector<int> encoder_widths{kNumKeys, 64, 32, 16};
  std::vector<int> decoder_hidden{64, 64};
  int n_freq = 6;
  double d_empty = 2.0;        // sdf value for states with no pressed key
  double bbox_inflation = 0.2; // query box inflation around the keyboard
  double lr = 2e-3;
  int epochs = 150;
  int queries_per_state = 128;
  int batch = 256;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

// Autoencoder over piano states supervised by the key-distance field: the
// encoder maps the 88 key flags to a latent goal vector, the decoder maps
// (latent, positional encoding of a query point) to the predicted distance.
// Both are optimized jointly end to end.
class GoalCodec {
 public:
  GoalCodec() = default;
  GoalCodec(CodecSpec spec, const KeyGeometry& geom);

  const CodecSpec& spec() const { return spec_; }
  const BBox& query_box() const { return box_; }
  int latent_dim() const { return encoder_.output_dim(); }
  bool trained() const { return trained_; }

  // Latent goal for a piano state. Throws if the codec has not been trained.
  Eigen::VectorXd encode(const PianoState& state) const;

  double predict(const PianoState& state, const Eigen::Vector3d& query) const;
  double predict_latent(const Eigen::VectorXd& latent, const Eigen::Vector3d& query) const;

  struct Sample {
    Eigen::VectorXd keys;  // 88 flags as doubles
    Eigen::Vector3d query;
    double sdf = 0.0;
  };

  // Mean squared error over the batch and its gradient with respect to the
  // flat parameter vector (encoder block then decoder block). Gradients are
  // accumulated per fixed-size block and reduced in block order, so the
  // result is bitwise identical for any thread count.
  double loss_and_grad(std::span<const Sample> batch, Eigen::VectorXd& grad, int jobs) const;

  int n_params() const { return encoder_.n_params() + decoder_.n_params(); }
  Eigen::VectorXd params() const;
  void set_params(const Eigen::VectorXd& p);

  static Eigen::VectorXd keys_vector(const PianoState& state);

  void save_json(const std::string& path) const;
  static GoalCodec load_json(const std::string& path);

  friend struct CodecTrainer;

 private:
  CodecSpec spec_;
  BBox box_;
  Mlp encoder_;
  Mlp decoder_;
  bool trained_ = false;
};

struct CodecTrainPoint {
  int epoch = 0;
  double loss = 0.0;
};

// Trains the codec on the given states (typically all frames of the corpus).
// Query points are resampled every epoch from the codec's query box.
std::vector<CodecTrainPoint> train_goal_codec(GoalCodec& codec,
                                              std::span<const PianoState> states,
                                              const KeyGeometry& geom);

}  // namespace pianomime
