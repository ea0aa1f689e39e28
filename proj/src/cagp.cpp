#include "gmp/cagp.hpp"

#include "gmp/vec_math.hpp"

namespace gmp::cagp {

std::string_view to_string(ProjectedTask t) noexcept {
  switch (t) {
    case ProjectedTask::None: return "none";
    case ProjectedTask::Classification: return "classification";
    case ProjectedTask::Domain: return "domain";
    case ProjectedTask::Both: return "both";
  }
  return "unknown";
}

bool detect_conflict(std::span<const double> g_c, std::span<const double> g_d) {
  vec::require_same_length(g_c, g_d, "detect_conflict");
  return vec::dot(g_c, g_d) < 0.0;
}

double task_strength(const igdm::ConfidenceStats& stats, Modality m) {
  // sigma is a ratio of floored sums, so it is strictly positive.
  return stats.rho[m] / stats.sigma[m];
}

std::vector<double> project_orthogonal(std::span<const double> strong, std::span<const double> weak) {
  vec::require_same_length(strong, weak, "project_orthogonal");
  const double weak_sq = vec::squared_norm(weak);
  std::vector<double> out(strong.begin(), strong.end());
  if (weak_sq < kDegenerateNormSq) return out;
  const double coeff = vec::dot(strong, weak) / weak_sq;
  vec::axpy(-coeff, weak, out);
  return out;
}

ProjectedTask stronger_task(double gamma) noexcept {
  if (gamma > 1.0) return ProjectedTask::Classification;
  if (gamma < 1.0) return ProjectedTask::Domain;
  return ProjectedTask::None;
}

ProjectionOutcome combine(std::span<const double> g_c, std::span<const double> g_d, double gamma,
                          ProjectedTask task, Modality m) {
  vec::require_same_length(g_c, g_d, "cagp");
  ProjectionOutcome out;
  out.modality = m;
  out.gamma = gamma;
  out.dot_before = vec::dot(g_c, g_d);
  out.conflict = out.dot_before < 0.0;
  out.projected_task = out.conflict ? task : ProjectedTask::None;
  switch (out.projected_task) {
    case ProjectedTask::Classification:
      out.classification = project_orthogonal(g_c, g_d);
      out.domain.assign(g_d.begin(), g_d.end());
      break;
    case ProjectedTask::Domain:
      out.classification.assign(g_c.begin(), g_c.end());
      out.domain = project_orthogonal(g_d, g_c);
      break;
    case ProjectedTask::Both:
      out.classification = project_orthogonal(g_c, g_d);
      out.domain = project_orthogonal(g_d, g_c);
      break;
    case ProjectedTask::None:
      out.classification.assign(g_c.begin(), g_c.end());
      out.domain.assign(g_d.begin(), g_d.end());
      break;
  }
  out.dot_after = out.projected_task == ProjectedTask::None ? out.dot_before
                                                            : vec::dot(out.classification, out.domain);
  out.total = vec::add(out.classification, out.domain);
  return out;
}

ProjectionOutcome apply_cagp(std::span<const double> g_c, std::span<const double> g_d, double gamma, Modality m) {
  return combine(g_c, g_d, gamma, stronger_task(gamma), m);
}

}  // namespace gmp::cagp
