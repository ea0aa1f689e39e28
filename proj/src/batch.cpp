#include "gmp/batch.hpp"

#include <algorithm>
#include <string>

namespace gmp {

void MultimodalBatch::validate(int num_classes, int num_domains) const {
  const std::size_t n = y.size();
  if (d.size() != n) throw ShapeError("batch: class and domain label counts differ");
  if (n == 0) return;
  if (!x_v.defined() || !x_a.defined()) throw ContractError("batch: missing feature matrix");
  if (x_v.rows() != n || x_a.rows() != n) {
    throw ShapeError("batch: feature rows (" + std::to_string(x_v.rows()) + ", " + std::to_string(x_a.rows()) +
                     ") do not match " + std::to_string(n) + " labels");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] < 0 || (num_classes > 0 && y[i] >= num_classes)) {
      throw LabelError("batch: class label " + std::to_string(y[i]) + " out of range");
    }
    if (d[i] < 0 || (num_domains > 0 && d[i] >= num_domains)) {
      throw LabelError("batch: domain label " + std::to_string(d[i]) + " out of range");
    }
  }
}

namespace {

ad::Tensor gather_rows(const ad::Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t cols = x.cols();
  std::vector<double> out;
  out.reserve(rows.size() * cols);
  auto data = x.data();
  for (std::size_t r : rows) {
    if (r >= x.rows()) throw ShapeError("batch select: row index out of range");
    out.insert(out.end(), data.begin() + r * cols, data.begin() + (r + 1) * cols);
  }
  return ad::Tensor::matrix(rows.size(), cols, std::move(out));
}

}  // namespace

MultimodalBatch MultimodalBatch::select(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw ContractError("batch select: no rows requested");
  MultimodalBatch out;
  out.x_v = gather_rows(x_v, rows);
  out.x_a = gather_rows(x_a, rows);
  out.y.reserve(rows.size());
  out.d.reserve(rows.size());
  for (std::size_t r : rows) {
    out.y.push_back(y[r]);
    out.d.push_back(d[r]);
  }
  return out;
}

MultimodalBatch concat_batches(std::span<const MultimodalBatch> parts) {
  MultimodalBatch out;
  std::size_t n = 0, dv = 0, da = 0;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (n == 0) {
      dv = p.x_v.cols();
      da = p.x_a.cols();
    } else if (p.x_v.cols() != dv || p.x_a.cols() != da) {
      throw ShapeError("concat_batches: feature dimensions differ");
    }
    n += p.size();
  }
  if (n == 0) return out;
  std::vector<double> v, a;
  v.reserve(n * dv);
  a.reserve(n * da);
  for (const auto& p : parts) {
    if (p.empty()) continue;
    v.insert(v.end(), p.x_v.data().begin(), p.x_v.data().end());
    a.insert(a.end(), p.x_a.data().begin(), p.x_a.data().end());
    out.y.insert(out.y.end(), p.y.begin(), p.y.end());
    out.d.insert(out.d.end(), p.d.begin(), p.d.end());
  }
  out.x_v = ad::Tensor::matrix(n, dv, std::move(v));
  out.x_a = ad::Tensor::matrix(n, da, std::move(a));
  return out;
}

}  // namespace gmp
