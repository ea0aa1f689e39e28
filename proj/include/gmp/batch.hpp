#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gmp/autodiff.hpp"
#include "gmp/modality.hpp"

namespace gmp {

// Paired per-modality features with class labels y and domain labels d.
struct MultimodalBatch {
  ad::Tensor x_v;  // [n x dim_v]
  ad::Tensor x_a;  // [n x dim_a]
  std::vector<int> y;
  std::vector<int> d;

  std::size_t size() const noexcept { return y.size(); }
  bool empty() const noexcept { return y.empty(); }
  const ad::Tensor& features(Modality m) const { return m == Modality::Video ? x_v : x_a; }

  // Checks aligned lengths and, when bounds are given, label ranges.
  void validate(int num_classes = 0, int num_domains = 0) const;

  // Rows at the given indices, in that order.
  MultimodalBatch select(std::span<const std::size_t> rows) const;
};

// Row-wise concatenation; dimensions must agree.
MultimodalBatch concat_batches(std::span<const MultimodalBatch> parts);

}  // namespace gmp
