#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "gmp/igdm.hpp"
#include "gmp/modality.hpp"

// Conflict-adaptive gradient projection. When a modality's (modulated)
// classification and domain gradients conflict, the stronger task's gradient
// is projected onto the normal plane of the weaker task's gradient and the
// weaker gradient is kept as is.
namespace gmp::cagp {

// Squared norms below this make the projection direction undefined; the
// vector is then returned unchanged.
inline constexpr double kDegenerateNormSq = 1e-18;

// Both is only produced by the symmetric PCGrad baseline.
enum class ProjectedTask { None, Classification, Domain, Both };

std::string_view to_string(ProjectedTask t) noexcept;

struct ProjectionOutcome {
  Modality modality = Modality::Video;
  bool conflict = false;
  double gamma = 1.0;
  ProjectedTask projected_task = ProjectedTask::None;
  std::vector<double> classification;  // g_c after projection (input copy if untouched)
  std::vector<double> domain;          // g_d after projection (input copy if untouched)
  std::vector<double> total;           // G = classification + domain
  double dot_before = 0.0;             // g_c . g_d
  double dot_after = 0.0;              // classification . domain
};

// True iff g_c . g_d < 0. Orthogonal gradients do not conflict.
bool detect_conflict(std::span<const double> g_c, std::span<const double> g_d);

// Relative task strength rho / sigma; > 1 means classification is ahead.
double task_strength(const igdm::ConfidenceStats& stats, Modality m);

// strong - (strong . weak / |weak|^2) weak
std::vector<double> project_orthogonal(std::span<const double> strong, std::span<const double> weak);

// Combines g_c and g_d, projecting `task` away from the other gradient when they conflict.
// ProjectedTask::None (or no conflict) gives the plain sum.
ProjectionOutcome combine(std::span<const double> g_c, std::span<const double> g_d, double gamma,
                          ProjectedTask task, Modality m = Modality::Video);

// Which task the adaptive rule projects for a given gamma: the stronger one.
ProjectedTask stronger_task(double gamma) noexcept;

ProjectionOutcome apply_cagp(std::span<const double> g_c, std::span<const double> g_d, double gamma,
                             Modality m = Modality::Video);

}  // namespace gmp::cagp
