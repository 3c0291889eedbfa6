#pragma once

#include <string>
#include <vector>

#include "pianomime/cem.hpp"
#include "pianomime/codec.hpp"
#include "pianomime/distill.hpp"
#include "pianomime/env.hpp"
#include "pianomime/ik.hpp"
#include "pianomime/residual.hpp"
#include "json.hpp"

namespace pianomime {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Run configuration for the pipeline. Every stage reads its parameters from
// here; the CLI can override the seeds and job counts globally. Parsing is
// strict: unknown keys and ill-typed values raise ConfigError naming the
// offending field.
struct PipelineConfig {
  double rate_hz = 20.0;
  int tail_frames = 2;
  std::string hand_spec_path;  // empty selects the built-in model

  EnvConfig env;
  IkParams ik;
  ResidualFeaturizer feat;
  CemConfig cem;
  CodecSpec codec;
  HighLevelSpec hl;
  LowLevelSpec ll;

  std::vector<std::string> train_songs;
  std::vector<std::string> eval_songs;

  void override_seed(std::uint64_t seed);
  void override_jobs(int jobs);
  void validate() const;

  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig from_json_file(const std::string& path);
  nlohmann::json to_json() const;
};

}  // namespace pianomime
