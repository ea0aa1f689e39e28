#include "gmp/grad_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "gmp/model.hpp"
#include "gmp/vec_math.hpp"

namespace gmp::gradcheck {

std::vector<BlockResult> GradCheckReport::failures() const {
  std::vector<BlockResult> out;
  std::copy_if(blocks.begin(), blocks.end(), std::back_inserter(out), [](const BlockResult& b) { return !b.passed; });
  return out;
}

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  vec::require_same_length(analytic, numeric, "relative_error");
  double diff = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
  const double denom = std::max({vec::norm(analytic), vec::norm(numeric), 1e-12});
  return std::sqrt(diff) / denom;
}

namespace {

MultimodalBatch random_batch(const GradCheckConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  MultimodalBatch b;
  auto fill = [&](std::size_t dim) {
    std::vector<double> v(cfg.batch_size * dim);
    for (auto& x : v) x = unit(rng);
    return ad::Tensor::matrix(cfg.batch_size, dim, std::move(v));
  };
  b.x_v = fill(cfg.dim_v);
  b.x_a = fill(cfg.dim_a);
  for (std::size_t i = 0; i < cfg.batch_size; ++i) {
    b.y.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.num_classes)));
    b.d.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.num_domains)));
  }
  return b;
}

ad::Tensor task_loss(const ParamSet& params, const MultimodalBatch& batch, bool domain) {
  auto out = forward(params, batch);
  return domain ? ad::cross_entropy(out.domain_logits, batch.d) : ad::cross_entropy(out.class_logits, batch.y);
}

}  // namespace

GradCheckReport run(const GradCheckConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ModelConfig mc;
  mc.input_dim_v = cfg.dim_v;
  mc.input_dim_a = cfg.dim_a;
  mc.encoder_hidden = cfg.hidden;
  mc.feature_dim = cfg.feature_dim;
  mc.num_classes = cfg.num_classes;
  mc.num_domains = cfg.num_domains;
  mc.seed = cfg.seed;
  ParamSet params = init_model(mc);

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  // Non-zero biases so every block sees a generic point.
  std::uniform_real_distribution<double> bias_noise(-0.1, 0.1);
  for (const auto& id : params.ids()) {
    if (id.ends_with(".bias")) {
      for (auto& x : params.get(id).mutable_data()) x = bias_noise(rng);
    }
  }
  const MultimodalBatch batch = random_batch(cfg, rng);

  GradCheckReport report;
  report.passed = true;
  for (bool domain : {false, true}) {
    const GradientMap analytic = backward(task_loss(params, batch, domain), params);
    for (const auto& id : params.ids()) {
      auto values = params.get(id).mutable_data();
      std::vector<double> numeric(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double saved = values[i];
        values[i] = saved + cfg.step;
        const double up = task_loss(params, batch, domain).item();
        values[i] = saved - cfg.step;
        const double down = task_loss(params, batch, domain).item();
        values[i] = saved;
        numeric[i] = (up - down) / (2.0 * cfg.step);
      }
      BlockResult r;
      r.param_id = id;
      r.loss = domain ? "loss_d" : "loss_c";
      r.rel_error = relative_error(analytic.at(id), numeric);
      r.passed = r.rel_error < cfg.tolerance;
      report.max_rel_error = std::max(report.max_rel_error, r.rel_error);
      report.passed = report.passed && r.passed;
      report.blocks.push_back(std::move(r));
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace gmp::gradcheck
