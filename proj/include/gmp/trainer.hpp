#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gmp/batch.hpp"
#include "gmp/cagp.hpp"
#include "gmp/igdm.hpp"
#include "gmp/model.hpp"
#include "gmp/param_set.hpp"

namespace gmp {

enum class Strategy {
  Base,
  IgdmOnly,
  CagpOnly,
  Gmp,
  UnifiedModulation,
  NoK,
  NoP,
  FixedProjClass,
  FixedProjDomain,
  PcGrad,
  ReverseCagp,
};

inline constexpr std::array<Strategy, 11> kAllStrategies{
    Strategy::Base,       Strategy::IgdmOnly,       Strategy::CagpOnly,        Strategy::Gmp,
    Strategy::UnifiedModulation, Strategy::NoK,     Strategy::NoP,             Strategy::FixedProjClass,
    Strategy::FixedProjDomain,   Strategy::PcGrad,  Strategy::ReverseCagp};

std::string_view to_string(Strategy s) noexcept;
Strategy parse_strategy(std::string_view name);

struct TrainConfig {
  double lambda = 0.1;
  double eta = 1e-4;
  double alpha_k = 0.3;
  double alpha_p = 0.3;
  int epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::Gmp;
  // Re-evaluates the encoder objective after each step to measure the actual loss change.
  bool track_loss_change = true;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Per-modality encoder gradients of the two objectives. g_d already carries
// the -lambda gradient-reversal factor.
struct TaskGradients {
  PerModality<std::vector<double>> g_c;
  PerModality<std::vector<double>> g_d;
  // Classifier partition from L_c, discriminator partition from +L_d.
  GradientMap head_grads;
  double loss_c = 0.0;
  double loss_d = 0.0;
  ForwardOutputs outputs;
};

TaskGradients compute_task_gradients(const ParamSet& params, const MultimodalBatch& batch, double lambda);

igdm::ConfidenceStats confidence_stats(const ForwardOutputs& outputs, const MultimodalBatch& batch);

// Per-modality result of a strategy's gradient transformation.
struct ModalityPlan {
  double k = 1.0;
  double p = 1.0;
  cagp::ProjectionOutcome outcome;
};

// The strategy table: maps raw task gradients to the update direction G for
// each modality's encoder.
PerModality<ModalityPlan> plan_update(Strategy strategy, const TaskGradients& grads,
                                      const igdm::ConfidenceStats& stats, double alpha_k, double alpha_p);

// First-order change of the encoder objective for the plain update G = g_c + g_d:
// -eta (|g_c|^2 + |g_d|^2 + 2 g_c.g_d).
double predicted_loss_change(std::span<const double> g_c, std::span<const double> g_d, double eta);
// First-order change when the objective gradient is `gradient` and the applied update is `update`.
double first_order_change(std::span<const double> gradient, std::span<const double> update, double eta);

struct StepMetrics {
  int step = 0;
  int epoch = 0;
  Strategy strategy = Strategy::Gmp;
  PerModality<double> rho, sigma, k, p, gamma;
  PerModality<bool> conflict;
  PerModality<double> norm_gc, norm_gd;
  double r_va = 0.0;
  double R_va = 0.0;
  double loss_c = 0.0;
  double loss_d = 0.0;
  double pred_dL = 0.0;
  double actual_dL = 0.0;

  friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

struct Accuracies {
  double fused = 0.0;
  double branch_v = 0.0;
  double branch_a = 0.0;
};

struct EpochMetrics {
  int epoch = 0;
  double source_val_acc = 0.0;
  double target_acc = 0.0;
  double branch_acc_v = 0.0;
  double branch_acc_a = 0.0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

// Fraction of rows whose argmax (first maximum) equals the label.
double accuracy(const ad::Tensor& logits, std::span<const int> labels);
Accuracies evaluate(const ParamSet& params, const MultimodalBatch& split);

// Stateful SGD driver. Steps are atomic: on error the parameters are untouched.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  StepMetrics step(ParamSet& params, const MultimodalBatch& batch, int epoch = 0);

  const TrainConfig& config() const noexcept { return cfg_; }
  int steps_taken() const noexcept { return step_; }
  double cumulative_norm_gc(Modality m) const noexcept { return cumulative_gc_[m]; }

 private:
  TrainConfig cfg_;
  int step_ = 0;
  PerModality<double> cumulative_gc_{0.0, 0.0};
};

}  // namespace gmp
