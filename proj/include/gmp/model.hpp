#pragma once

#include <cstdint>
#include <string>

#include "gmp/autodiff.hpp"
#include "gmp/batch.hpp"
#include "gmp/modality.hpp"
#include "gmp/param_set.hpp"

namespace gmp {

struct ModelConfig {
  std::size_t input_dim_v = 0;
  std::size_t input_dim_a = 0;
  std::size_t encoder_hidden = 256;
  std::size_t feature_dim = 64;
  int num_classes = 0;
  int num_domains = 0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Parameter ids. Encoders are linear -> ReLU -> linear; the heads act on
// [features_v | features_a], so rows [0, F) of a head weight are the video
// block and rows [F, 2F) the audio block.
namespace param_ids {
std::string encoder_weight(Modality m, int layer);
std::string encoder_bias(Modality m, int layer);
inline constexpr const char* kClassifierWeight = "classifier.weight";
inline constexpr const char* kClassifierBias = "classifier.bias";
inline constexpr const char* kDiscriminatorWeight = "discriminator.weight";
inline constexpr const char* kDiscriminatorBias = "discriminator.bias";
}  // namespace param_ids

struct ForwardOutputs {
  ad::Tensor features_v;     // [n x F]
  ad::Tensor features_a;     // [n x F]
  ad::Tensor class_logits;   // [n x Y], includes the classifier bias
  ad::Tensor domain_logits;  // [n x C], includes the discriminator bias
  // Head blocks applied to one modality's features, without bias.
  PerModality<ad::Tensor> per_modality_class_logits;
  PerModality<ad::Tensor> per_modality_domain_logits;

  const ad::Tensor& features(Modality m) const { return m == Modality::Video ? features_v : features_a; }
};

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero, deterministic in cfg.seed.
ParamSet init_model(const ModelConfig& cfg);

// Pure function of (params, batch).
ForwardOutputs forward(const ParamSet& params, const MultimodalBatch& batch);

ad::Tensor encode(const ParamSet& params, const ad::Tensor& x, Modality m);

// Classifier logits from modality m alone: W^m phi^m + b_y.
ad::Tensor unimodal_branch_logits(const ParamSet& params, const MultimodalBatch& batch, Modality m);
ad::Tensor unimodal_branch_logits(const ParamSet& params, const MultimodalBatch& batch, std::string_view m);

std::size_t feature_dim_of(const ParamSet& params);

}  // namespace gmp
