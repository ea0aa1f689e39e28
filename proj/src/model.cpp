#include "gmp/model.hpp"

#include <cmath>
#include <random>

namespace gmp {

void ModelConfig::validate() const {
  if (input_dim_v < 1 || input_dim_a < 1) throw ConfigError("model: input dimensions must be >= 1");
  if (encoder_hidden < 1) throw ConfigError("model: encoder_hidden must be >= 1");
  if (feature_dim < 1) throw ConfigError("model: feature_dim must be >= 1");
  if (num_classes < 2) throw ConfigError("model: num_classes must be >= 2");
  if (num_domains < 2) throw ConfigError("model: num_domains must be >= 2");
}

namespace param_ids {

std::string encoder_weight(Modality m, int layer) {
  return "encoder_" + std::string(short_name(m)) + ".fc" + std::to_string(layer) + ".weight";
}

std::string encoder_bias(Modality m, int layer) {
  return "encoder_" + std::string(short_name(m)) + ".fc" + std::to_string(layer) + ".bias";
}

}  // namespace param_ids

namespace {

ad::Tensor uniform_weight(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> w(fan_in * fan_out);
  for (double& x : w) x = dist(rng);
  return ad::Tensor::matrix(fan_in, fan_out, std::move(w), true);
}

ad::Tensor zero_bias(std::size_t n) { return ad::Tensor::zeros({1, n}, true); }

}  // namespace

ParamSet init_model(const ModelConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  ParamSet params;
  for (Modality m : kModalities) {
    const std::size_t in = m == Modality::Video ? cfg.input_dim_v : cfg.input_dim_a;
    const Partition part = encoder_partition(m);
    params.add(param_ids::encoder_weight(m, 1), uniform_weight(in, cfg.encoder_hidden, rng), part);
    params.add(param_ids::encoder_bias(m, 1), zero_bias(cfg.encoder_hidden), part);
    params.add(param_ids::encoder_weight(m, 2), uniform_weight(cfg.encoder_hidden, cfg.feature_dim, rng), part);
    params.add(param_ids::encoder_bias(m, 2), zero_bias(cfg.feature_dim), part);
  }
  const std::size_t fused = 2 * cfg.feature_dim;
  params.add(param_ids::kClassifierWeight,
             uniform_weight(fused, static_cast<std::size_t>(cfg.num_classes), rng), Partition::Classifier);
  params.add(param_ids::kClassifierBias, zero_bias(static_cast<std::size_t>(cfg.num_classes)),
             Partition::Classifier);
  params.add(param_ids::kDiscriminatorWeight,
             uniform_weight(fused, static_cast<std::size_t>(cfg.num_domains), rng), Partition::Discriminator);
  params.add(param_ids::kDiscriminatorBias, zero_bias(static_cast<std::size_t>(cfg.num_domains)),
             Partition::Discriminator);
  return params;
}

std::size_t feature_dim_of(const ParamSet& params) {
  return params.get(param_ids::encoder_weight(Modality::Video, 2)).cols();
}

ad::Tensor encode(const ParamSet& params, const ad::Tensor& x, Modality m) {
  const auto& w1 = params.get(param_ids::encoder_weight(m, 1));
  if (x.cols() != w1.rows()) {
    throw ShapeError("forward: modality " + std::string(short_name(m)) + " expects " + std::to_string(w1.rows()) +
                     " input features, batch has " + std::to_string(x.cols()));
  }
  auto hidden = ad::relu(ad::add_bias(ad::matmul(x, w1), params.get(param_ids::encoder_bias(m, 1))));
  return ad::add_bias(ad::matmul(hidden, params.get(param_ids::encoder_weight(m, 2))),
                      params.get(param_ids::encoder_bias(m, 2)));
}

ForwardOutputs forward(const ParamSet& params, const MultimodalBatch& batch) {
  if (batch.empty()) throw ContractError("forward: empty batch");
  batch.validate();
  ForwardOutputs out;
  out.features_v = encode(params, batch.x_v, Modality::Video);
  out.features_a = encode(params, batch.x_a, Modality::Audio);
  const std::size_t f = out.features_v.cols();

  const auto& wc = params.get(param_ids::kClassifierWeight);
  const auto& wd = params.get(param_ids::kDiscriminatorWeight);
  if (wc.rows() != 2 * f || wd.rows() != 2 * f) throw ShapeError("forward: head input width must be 2 x feature_dim");

  auto fused = ad::concat_cols(out.features_v, out.features_a);
  out.class_logits = ad::add_bias(ad::matmul(fused, wc), params.get(param_ids::kClassifierBias));
  out.domain_logits = ad::add_bias(ad::matmul(fused, wd), params.get(param_ids::kDiscriminatorBias));

  for (Modality m : kModalities) {
    const std::size_t begin = m == Modality::Video ? 0 : f;
    out.per_modality_class_logits[m] = ad::matmul(out.features(m), ad::slice_rows(wc, begin, begin + f));
    out.per_modality_domain_logits[m] = ad::matmul(out.features(m), ad::slice_rows(wd, begin, begin + f));
  }
  return out;
}

ad::Tensor unimodal_branch_logits(const ParamSet& params, const MultimodalBatch& batch, Modality m) {
  if (batch.empty()) throw ContractError("unimodal_branch_logits: empty batch");
  auto features = encode(params, batch.features(m), m);
  const std::size_t f = features.cols();
  const std::size_t begin = m == Modality::Video ? 0 : f;
  const auto& wc = params.get(param_ids::kClassifierWeight);
  return ad::add_bias(ad::matmul(features, ad::slice_rows(wc, begin, begin + f)),
                      params.get(param_ids::kClassifierBias));
}

ad::Tensor unimodal_branch_logits(const ParamSet& params, const MultimodalBatch& batch, std::string_view m) {
  return unimodal_branch_logits(params, batch, parse_modality(m));
}

}  // namespace gmp
