#include "gmp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmp/vec_math.hpp"

namespace gmp {

namespace {

constexpr std::array<std::string_view, 11> kStrategyNames{
    "base", "igdm_only", "cagp_only", "gmp", "unified_modulation", "no_k",
    "no_p", "fixed_proj_class", "fixed_proj_domain", "pcgrad", "reverse_cagp"};

// Floor for the norm ratios r_va and R_va so they stay finite at zero gradients.
constexpr double kNormFloor = 1e-12;

double finite_or_throw(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
  return v;
}

void require_finite(std::span<const double> xs, const char* what) {
  if (!vec::all_finite(xs)) throw NumericError(std::string("non-finite values in ") + what);
}

double encoder_objective(const ParamSet& params, const MultimodalBatch& batch, double lambda) {
  auto out = forward(params, batch);
  const double lc = ad::cross_entropy(out.class_logits, batch.y).item();
  const double ld = ad::cross_entropy(out.domain_logits, batch.d).item();
  return lc - lambda * ld;
}

}  // namespace

std::string_view to_string(Strategy s) noexcept { return kStrategyNames[static_cast<std::size_t>(s)]; }

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kAllStrategies) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("train: lambda must be finite and >= 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("train: eta must be finite and >= 0");
  if (!(alpha_k >= 0.0) || !(alpha_p >= 0.0) || !std::isfinite(alpha_k) || !std::isfinite(alpha_p)) {
    throw ConfigError("train: alpha_k and alpha_p must be finite and >= 0");
  }
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
}

TaskGradients compute_task_gradients(const ParamSet& params, const MultimodalBatch& batch, double lambda) {
  TaskGradients tg;
  tg.outputs = forward(params, batch);
  auto loss_c = ad::cross_entropy(tg.outputs.class_logits, batch.y);
  auto loss_d = ad::cross_entropy(tg.outputs.domain_logits, batch.d);
  tg.loss_c = finite_or_throw(loss_c.item(), "classification loss");
  tg.loss_d = finite_or_throw(loss_d.item(), "domain loss");

  // Two separate passes: the objectives must stay separable per modality.
  const GradientMap grads_c = backward(loss_c, params);
  const GradientMap grads_d = backward(loss_d, params);

  for (Modality m : kModalities) {
    const Partition part = encoder_partition(m);
    tg.g_c[m] = flatten_grads(grads_c, params, part);
    tg.g_d[m] = vec::scaled(flatten_grads(grads_d, params, part), -lambda);
  }
  for (const auto& id : params.ids_in(Partition::Classifier)) tg.head_grads.emplace(id, grads_c.at(id));
  for (const auto& id : params.ids_in(Partition::Discriminator)) tg.head_grads.emplace(id, grads_d.at(id));
  return tg;
}

igdm::ConfidenceStats confidence_stats(const ForwardOutputs& outputs, const MultimodalBatch& batch) {
  const auto q_v = igdm::semantic_confidence(outputs.per_modality_class_logits.v, batch.y);
  const auto q_a = igdm::semantic_confidence(outputs.per_modality_class_logits.a, batch.y);
  const auto c_v = igdm::domain_confidence(outputs.per_modality_domain_logits.v, batch.d);
  const auto c_a = igdm::domain_confidence(outputs.per_modality_domain_logits.a, batch.d);
  return igdm::discrepancy_ratios(q_v, q_a, c_v, c_a);
}

PerModality<ModalityPlan> plan_update(Strategy strategy, const TaskGradients& grads,
                                      const igdm::ConfidenceStats& stats, double alpha_k, double alpha_p) {
  const auto coeffs = igdm::modulation_coefficients(stats, alpha_k, alpha_p);
  PerModality<ModalityPlan> plans;
  for (Modality m : kModalities) {
    const double gamma = cagp::task_strength(stats, m);
    double k = coeffs.k[m];
    double p = coeffs.p[m];
    cagp::ProjectedTask task = cagp::stronger_task(gamma);
    switch (strategy) {
      case Strategy::Base:
        k = p = 1.0;
        task = cagp::ProjectedTask::None;
        break;
      case Strategy::IgdmOnly:
        task = cagp::ProjectedTask::None;
        break;
      case Strategy::CagpOnly:
        k = p = 1.0;
        break;
      case Strategy::Gmp:
        break;
      case Strategy::UnifiedModulation:
        p = k;
        break;
      case Strategy::NoK:
        k = 1.0;
        break;
      case Strategy::NoP:
        p = 1.0;
        break;
      case Strategy::FixedProjClass:
        task = cagp::ProjectedTask::Classification;
        break;
      case Strategy::FixedProjDomain:
        task = cagp::ProjectedTask::Domain;
        break;
      case Strategy::PcGrad:
        task = cagp::ProjectedTask::Both;
        break;
      case Strategy::ReverseCagp:
        task = gamma > 1.0   ? cagp::ProjectedTask::Domain
               : gamma < 1.0 ? cagp::ProjectedTask::Classification
                             : cagp::ProjectedTask::None;
        break;
    }
    const auto modulated = igdm::modulate(grads.g_c[m], grads.g_d[m], k, p);
    plans[m] = ModalityPlan{k, p, cagp::combine(modulated.g_c, modulated.g_d, gamma, task, m)};
  }
  return plans;
}

double predicted_loss_change(std::span<const double> g_c, std::span<const double> g_d, double eta) {
  vec::require_same_length(g_c, g_d, "predicted_loss_change");
  return -eta * (vec::squared_norm(g_c) + vec::squared_norm(g_d) + 2.0 * vec::dot(g_c, g_d));
}

double first_order_change(std::span<const double> gradient, std::span<const double> update, double eta) {
  return -eta * vec::dot(gradient, update);
}

double accuracy(const ad::Tensor& logits, std::span<const int> labels) {
  const std::size_t n = logits.rows(), k = logits.cols();
  if (n == 0 || labels.size() != n) throw ShapeError("accuracy: label count does not match logits");
  auto values = logits.data();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = values.subspan(i * k, k);
    const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

Accuracies evaluate(const ParamSet& params, const MultimodalBatch& split) {
  if (split.empty()) throw ContractError("evaluate: empty split");
  const auto out = forward(params, split);
  Accuracies acc;
  acc.fused = accuracy(out.class_logits, split.y);
  // Branch logits reuse the already-computed features: W^m phi^m + b_y.
  const auto& bias = params.get(param_ids::kClassifierBias);
  acc.branch_v = accuracy(ad::add_bias(out.per_modality_class_logits.v, bias), split.y);
  acc.branch_a = accuracy(ad::add_bias(out.per_modality_class_logits.a, bias), split.y);
  return acc;
}

Trainer::Trainer(TrainConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

StepMetrics Trainer::step(ParamSet& params, const MultimodalBatch& batch, int epoch) {
  const TaskGradients tg = compute_task_gradients(params, batch, cfg_.lambda);
  const auto stats = confidence_stats(tg.outputs, batch);
  const auto plans = plan_update(cfg_.strategy, tg, stats, cfg_.alpha_k, cfg_.alpha_p);

  StepMetrics rec;
  rec.step = step_ + 1;
  rec.epoch = epoch;
  rec.strategy = cfg_.strategy;
  rec.loss_c = tg.loss_c;
  rec.loss_d = tg.loss_d;
  PerModality<double> cumulative = cumulative_gc_;
  for (Modality m : kModalities) {
    const auto& plan = plans[m];
    require_finite(plan.outcome.total, "encoder update");
    rec.rho[m] = stats.rho[m];
    rec.sigma[m] = stats.sigma[m];
    rec.k[m] = plan.k;
    rec.p[m] = plan.p;
    rec.gamma[m] = plan.outcome.gamma;
    rec.conflict[m] = plan.outcome.conflict;
    rec.norm_gc[m] = vec::norm(tg.g_c[m]);
    rec.norm_gd[m] = vec::norm(tg.g_d[m]);
    cumulative[m] += rec.norm_gc[m];
    rec.pred_dL += first_order_change(vec::add(tg.g_c[m], tg.g_d[m]), plan.outcome.total, cfg_.eta);
  }
  rec.r_va = rec.norm_gc.v / std::max(rec.norm_gc.a, kNormFloor);
  rec.R_va = cumulative.v / std::max(cumulative.a, kNormFloor);
  for (const auto& [id, g] : tg.head_grads) require_finite(g, id.c_str());

  GradientMap encoder_update;
  for (Modality m : kModalities) {
    encoder_update.merge(unflatten_grads(plans[m].outcome.total, params, encoder_partition(m)));
  }

  if (cfg_.track_loss_change) {
    // Heads stay at their pre-step values so the change isolates the encoder update.
    ParamSet probe = params.clone();
    apply_update(probe, encoder_update, cfg_.eta);
    const double before = tg.loss_c - cfg_.lambda * tg.loss_d;
    rec.actual_dL = finite_or_throw(encoder_objective(probe, batch, cfg_.lambda) - before, "loss change");
  }

  // Everything is validated; commit.
  apply_update(params, encoder_update, cfg_.eta);
  apply_update(params, tg.head_grads, cfg_.eta);
  cumulative_gc_ = cumulative;
  ++step_;
  return rec;
}

}  // namespace gmp
