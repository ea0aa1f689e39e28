#pragma once

#include <span>
#include <vector>

#include "gmp/autodiff.hpp"
#include "gmp/modality.hpp"

// Inter-modality gradient decoupled modulation: per-sample confidences from
// each modality's head block, per-batch discrepancy ratios between the two
// modalities, and the suppression coefficients applied to each modality's
// classification (k) and domain (p) gradients.
namespace gmp::igdm {

// Floor applied to confidence sums before they are used as denominators.
inline constexpr double kConfidenceFloor = 1e-12;

// q_i = softmax(W^m phi^m(x_i))[y_i] for each row.
std::vector<double> semantic_confidence(const ad::Tensor& per_modality_class_logits, std::span<const int> labels);
// c_i = softmax(D^m phi^m(x_i))[d_i] for each row.
std::vector<double> domain_confidence(const ad::Tensor& per_modality_domain_logits, std::span<const int> domains);

struct ConfidenceStats {
  PerModality<double> q_sum;
  PerModality<double> c_sum;
  // rho[m] = sum q^m / sum q^other; > 1 means m is ahead on classification.
  PerModality<double> rho;
  // sigma[m] = sum c^other / sum c^m; > 1 means m is the more domain-invariant.
  PerModality<double> sigma;
};

ConfidenceStats discrepancy_ratios(std::span<const double> q_v, std::span<const double> q_a,
                                   std::span<const double> c_v, std::span<const double> c_a);

struct ModulationCoefficients {
  PerModality<double> k{1.0, 1.0};
  PerModality<double> p{1.0, 1.0};
  double alpha_k = 0.0;
  double alpha_p = 0.0;
};

// 1 - tanh(alpha * ratio) when ratio > 1, otherwise 1.
double suppression_coefficient(double ratio, double alpha);

ModulationCoefficients modulation_coefficients(const ConfidenceStats& stats, double alpha_k, double alpha_p);

struct ModulatedGradients {
  std::vector<double> g_c;
  std::vector<double> g_d;
};

ModulatedGradients modulate(std::span<const double> g_c, std::span<const double> g_d, double k, double p);

}  // namespace gmp::igdm
