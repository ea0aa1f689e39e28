#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gmp::gradcheck {

struct GradCheckConfig {
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double step = 1e-5;
  int num_classes = 4;
  int num_domains = 3;
  std::size_t dim_v = 12;
  std::size_t dim_a = 10;
  std::size_t hidden = 16;
  std::size_t feature_dim = 8;
  std::size_t batch_size = 8;
};

// One parameter block checked against one loss.
struct BlockResult {
  std::string param_id;
  std::string loss;  // "loss_c" or "loss_d"
  double rel_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<BlockResult> blocks;
  double max_rel_error = 0.0;
  bool passed = false;
  double seconds = 0.0;

  std::vector<BlockResult> failures() const;
};

// |a - f| / max(|a|, |f|, 1e-12) over the whole block.
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

// Central differences of both task losses against reverse-mode gradients for
// every parameter of a freshly initialised small model. A block passes iff its
// relative error is strictly below the tolerance.
GradCheckReport run(const GradCheckConfig& cfg);

}  // namespace gmp::gradcheck
