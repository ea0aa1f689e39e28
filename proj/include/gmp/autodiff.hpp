#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "gmp/errors.hpp"

// Minimal reverse-mode automatic differentiation over dense row-major
// double tensors. Only what the two-modality MLP model needs is provided:
// matmul, bias-row addition, ReLU, column concatenation, row slicing,
// softmax, cross-entropy and a few reductions.
namespace gmp::ad {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                       bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const { return data().size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  // Writable view of a leaf's values. Interior nodes are immutable.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const;
  bool is_leaf() const;
  // Gradient left by the most recent backward() that reached this tensor; empty otherwise.
  std::span<const double> grad() const;
  void zero_grad() const;

  // Leaf copy of the values with the same requires_grad flag and no history.
  Tensor clone() const;
  // Leaf copy of the values that does not require grad.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

Tensor matmul(const Tensor& a, const Tensor& b);
// x [n x m] plus a bias row b [1 x m] (or [m]) broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor scale(const Tensor& x, double s);
Tensor concat_cols(const Tensor& a, const Tensor& b);
// Rows [begin, end) of a matrix.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor softmax_rows(const Tensor& x);
Tensor sum(const Tensor& x);
// Mean negative log-likelihood of the labelled class under a row softmax.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

double tanh_scalar(double x);

// Stable softmax of one row, written into out.
void softmax_row(std::span<const double> row, std::span<double> out);

// Runs reverse accumulation from a scalar loss. All gradient buffers in the
// reachable graph are zeroed first, so repeated calls are idempotent.
void backward(const Tensor& loss);

// Number of worker threads the matmul kernel may use (GMP_THREADS, default 1).
unsigned kernel_threads();

}  // namespace gmp::ad
