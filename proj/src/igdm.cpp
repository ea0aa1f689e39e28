#include "gmp/igdm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gmp/vec_math.hpp"

namespace gmp::igdm {

namespace {

std::vector<double> labelled_probability(const ad::Tensor& logits, std::span<const int> labels, const char* what) {
  const std::size_t n = logits.rows(), k = logits.cols();
  if (labels.size() != n) {
    throw ShapeError(std::string(what) + ": " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                     " rows");
  }
  std::vector<double> out(n);
  std::vector<double> probs(k);
  auto values = logits.data();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw LabelError(std::string(what) + ": label " + std::to_string(label) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    ad::softmax_row(values.subspan(i * k, k), probs);
    out[i] = probs[static_cast<std::size_t>(label)];
  }
  return out;
}

double checked_sum(std::span<const double> xs) {
  double s = std::accumulate(xs.begin(), xs.end(), 0.0);
  if (!std::isfinite(s)) throw NumericError("discrepancy_ratios: non-finite confidence sum");
  return s;
}

}  // namespace

std::vector<double> semantic_confidence(const ad::Tensor& per_modality_class_logits, std::span<const int> labels) {
  return labelled_probability(per_modality_class_logits, labels, "semantic_confidence");
}

std::vector<double> domain_confidence(const ad::Tensor& per_modality_domain_logits, std::span<const int> domains) {
  return labelled_probability(per_modality_domain_logits, domains, "domain_confidence");
}

ConfidenceStats discrepancy_ratios(std::span<const double> q_v, std::span<const double> q_a,
                                   std::span<const double> c_v, std::span<const double> c_a) {
  if (q_v.empty()) throw ContractError("discrepancy_ratios: empty batch");
  if (q_a.size() != q_v.size() || c_v.size() != q_v.size() || c_a.size() != q_v.size()) {
    throw ShapeError("discrepancy_ratios: confidence vectors differ in length");
  }
  ConfidenceStats s;
  s.q_sum = {checked_sum(q_v), checked_sum(q_a)};
  s.c_sum = {checked_sum(c_v), checked_sum(c_a)};
  const PerModality<double> q{std::max(s.q_sum.v, kConfidenceFloor), std::max(s.q_sum.a, kConfidenceFloor)};
  const PerModality<double> c{std::max(s.c_sum.v, kConfidenceFloor), std::max(s.c_sum.a, kConfidenceFloor)};
  for (Modality m : kModalities) {
    s.rho[m] = q[m] / q[other(m)];
    s.sigma[m] = c[other(m)] / c[m];
  }
  return s;
}

double suppression_coefficient(double ratio, double alpha) {
  if (alpha < 0.0 || !std::isfinite(alpha)) throw ConfigError("modulation alpha must be finite and >= 0");
  if (!(ratio > 1.0)) return 1.0;
  // 1 - tanh(x) written as 2 e^{-2x} / (1 + e^{-2x}): no cancellation, stays
  // positive until e^{-2x} underflows, where it is clamped to the smallest normal.
  const double e = std::exp(-2.0 * alpha * ratio);
  return std::max(2.0 * e / (1.0 + e), std::numeric_limits<double>::min());
}

ModulationCoefficients modulation_coefficients(const ConfidenceStats& stats, double alpha_k, double alpha_p) {
  ModulationCoefficients out;
  out.alpha_k = alpha_k;
  out.alpha_p = alpha_p;
  for (Modality m : kModalities) {
    out.k[m] = suppression_coefficient(stats.rho[m], alpha_k);
    out.p[m] = suppression_coefficient(stats.sigma[m], alpha_p);
  }
  return out;
}

ModulatedGradients modulate(std::span<const double> g_c, std::span<const double> g_d, double k, double p) {
  return {vec::scaled(g_c, k), vec::scaled(g_d, p)};
}

}  // namespace gmp::igdm
