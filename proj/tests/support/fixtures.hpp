#pragma once

#include <random>

#include "fd_oracle.hpp"
#include "gmp/batch.hpp"
#include "gmp/model.hpp"

namespace gmp::testing {

inline ModelConfig small_model_config(std::uint64_t seed = 0, int num_classes = 4, int num_domains = 3) {
  ModelConfig cfg;
  cfg.input_dim_v = 10;
  cfg.input_dim_a = 8;
  cfg.encoder_hidden = 12;
  cfg.feature_dim = 6;
  cfg.num_classes = num_classes;
  cfg.num_domains = num_domains;
  cfg.seed = seed;
  return cfg;
}

inline MultimodalBatch random_batch(const ModelConfig& cfg, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MultimodalBatch b;
  b.x_v = ad::Tensor::matrix(n, cfg.input_dim_v, uniform_vector(rng, n * cfg.input_dim_v));
  b.x_a = ad::Tensor::matrix(n, cfg.input_dim_a, uniform_vector(rng, n * cfg.input_dim_a));
  for (std::size_t i = 0; i < n; ++i) {
    b.y.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.num_classes)));
    b.d.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.num_domains)));
  }
  return b;
}

// Parameters scattered around the initialisation so no gradient is trivially zero.
inline ParamSet random_params(const ModelConfig& cfg, std::uint64_t seed) {
  ParamSet ps = init_model(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (const auto& id : ps.ids()) {
    for (auto& x : ps.get(id).mutable_data()) x += u(rng);
  }
  return ps;
}

}  // namespace gmp::testing
