#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gmp/model.hpp"
#include "gmp/synthdata.hpp"
#include "gmp/trainer.hpp"

namespace gmp {

// Everything a run needs. Model input sizes, class and domain counts are
// taken from the data section.
struct ExperimentConfig {
  synth::SynthConfig data;
  std::size_t encoder_hidden = 256;
  std::size_t feature_dim = 64;
  std::uint64_t model_seed = 0;
  TrainConfig train;
  int target_domain = 2;
  double val_fraction = 0.2;
  // Seeds used by multi-seed commands (ablate); empty means the train seed alone.
  std::vector<std::uint64_t> seeds;

  ModelConfig model() const;
  void validate() const;
  // Sets the data, model and train seeds to `seed`.
  void apply_seed(std::uint64_t seed);
  std::vector<std::uint64_t> run_seeds() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Sectioned key=value text:
//
//   [data]
//   preset = asym-v
//   discrim_strength_v = 1.0
//   [train]
//   strategy = gmp
//
// '#' and ';' start comments. A data preset is applied before the other data
// keys regardless of their order. Unknown sections or keys are errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text with every key spelled out; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& cfg);

}  // namespace gmp
