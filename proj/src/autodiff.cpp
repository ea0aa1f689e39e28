#include "gmp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>
#include <unordered_set>

namespace gmp::ad {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

const Node& checked(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  return *t.node();
}

void require_matrix(const Node& n, const char* op) {
  if (n.shape.size() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " + shape_string(n.shape));
  }
}

NodePtr make_node(Shape shape, std::vector<double> value, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad =
      std::any_of(inputs.begin(), inputs.end(), [](const NodePtr& p) { return p->requires_grad; });
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward_fn);
  }
  return node;
}

void ensure_grad(Node& n) {
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
}

// out[n x m] (+)= a[n x k] * b[k x m]; rows are independent so the split is deterministic.
void gemm_rows(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m) {
  auto kernel = [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t i = row_begin; i < row_end; ++i) {
      double* out_row = out + i * m;
      const double* a_row = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = a_row[p];
        if (aip == 0.0) continue;
        const double* b_row = b + p * m;
        for (std::size_t j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
      }
    }
  };
  const unsigned threads = kernel_threads();
  if (threads <= 1 || n * k * m < 1u << 16 || n < 2) {
    kernel(0, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin < end) pool.emplace_back(kernel, begin, end);
  }
  kernel(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

unsigned kernel_threads() {
  static const unsigned threads = [] {
    const char* env = std::getenv("GMP_THREADS");
    if (!env) return 1u;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1u;
    return static_cast<unsigned>(std::min<long>(v, 256));
  }();
  return threads;
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (element_count(shape) != data.size()) {
    throw ShapeError("tensor shape " + shape_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = element_count(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  return Tensor({rows, cols}, std::move(data), requires_grad);
}

const Shape& Tensor::shape() const { return checked(*this, "shape").shape; }

std::size_t Tensor::rows() const {
  require_matrix(checked(*this, "rows"), "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_matrix(checked(*this, "cols"), "cols");
  return node_->shape[1];
}

std::span<const double> Tensor::data() const { return checked(*this, "data").value; }

std::span<double> Tensor::mutable_data() {
  checked(*this, "mutable_data");
  if (!is_leaf()) throw ContractError("mutable_data: only leaf tensors may be written");
  return node_->value;
}

double Tensor::item() const {
  const Node& n = checked(*this, "item");
  if (n.value.size() != 1) throw ContractError("item: tensor is not a scalar, shape " + shape_string(n.shape));
  return n.value[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  const Node& n = checked(*this, "at");
  require_matrix(n, "at");
  if (row >= n.shape[0] || col >= n.shape[1]) throw ShapeError("at: index out of range");
  return n.value[row * n.shape[1] + col];
}

bool Tensor::requires_grad() const { return checked(*this, "requires_grad").requires_grad; }

bool Tensor::is_leaf() const { return !checked(*this, "is_leaf").backward; }

std::span<const double> Tensor::grad() const { return checked(*this, "grad").grad; }

void Tensor::zero_grad() const {
  if (!node_) return;
  Node& n = *node_;
  std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  const Node& n = checked(*this, "clone");
  return Tensor(n.shape, n.value, n.requires_grad);
}

Tensor Tensor::detach() const {
  const Node& n = checked(*this, "detach");
  return Tensor(n.shape, n.value, false);
}

// ---------------------------------------------------------------------------
// Operations

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Node& an = checked(a, "matmul");
  const Node& bn = checked(b, "matmul");
  require_matrix(an, "matmul");
  require_matrix(bn, "matmul");
  const std::size_t n = an.shape[0], k = an.shape[1], m = bn.shape[1];
  if (bn.shape[0] != k) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_string(an.shape) + " x " +
                     shape_string(bn.shape));
  }
  std::vector<double> out(n * m, 0.0);
  gemm_rows(an.value.data(), bn.value.data(), out.data(), n, k, m);
  return Tensor(make_node({n, m}, std::move(out), {a.node(), b.node()}, [n, k, m](Node& self) {
    Node& lhs = *self.inputs[0];
    Node& rhs = *self.inputs[1];
    const double* g = self.grad.data();
    if (lhs.requires_grad) {
      ensure_grad(lhs);
      // dA = G * B^T
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          const double* b_row = rhs.value.data() + p * m;
          const double* g_row = g + i * m;
          for (std::size_t j = 0; j < m; ++j) s += g_row[j] * b_row[j];
          lhs.grad[i * k + p] += s;
        }
      }
    }
    if (rhs.requires_grad) {
      ensure_grad(rhs);
      // dB = A^T * G
      for (std::size_t i = 0; i < n; ++i) {
        const double* a_row = lhs.value.data() + i * k;
        const double* g_row = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = a_row[p];
          if (aip == 0.0) continue;
          double* out_row = rhs.grad.data() + p * m;
          for (std::size_t j = 0; j < m; ++j) out_row[j] += aip * g_row[j];
        }
      }
    }
  }));
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const Node& xn = checked(x, "add_bias");
  const Node& bn = checked(bias, "add_bias");
  require_matrix(xn, "add_bias");
  const std::size_t n = xn.shape[0], m = xn.shape[1];
  const bool row_shaped = (bn.shape.size() == 2 && bn.shape[0] == 1 && bn.shape[1] == m) ||
                          (bn.shape.size() == 1 && bn.shape[0] == m);
  if (!row_shaped) {
    throw ShapeError("add_bias: bias " + shape_string(bn.shape) + " does not match columns of " +
                     shape_string(xn.shape));
  }
  std::vector<double> out(xn.value);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bn.value[j];
  }
  return Tensor(make_node({n, m}, std::move(out), {x.node(), bias.node()}, [n, m](Node& self) {
    Node& xin = *self.inputs[0];
    Node& bin = *self.inputs[1];
    if (xin.requires_grad) {
      ensure_grad(xin);
      for (std::size_t i = 0; i < n * m; ++i) xin.grad[i] += self.grad[i];
    }
    if (bin.requires_grad) {
      ensure_grad(bin);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) bin.grad[j] += self.grad[i * m + j];
      }
    }
  }));
}

Tensor add(const Tensor& a, const Tensor& b) {
  const Node& an = checked(a, "add");
  const Node& bn = checked(b, "add");
  if (an.shape != bn.shape) {
    throw ShapeError("add: shapes differ, " + shape_string(an.shape) + " vs " + shape_string(bn.shape));
  }
  std::vector<double> out(an.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = an.value[i] + bn.value[i];
  return Tensor(make_node(an.shape, std::move(out), {a.node(), b.node()}, [](Node& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      ensure_grad(*in);
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  }));
}

Tensor relu(const Tensor& x) {
  const Node& xn = checked(x, "relu");
  std::vector<double> out(xn.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xn.value[i] > 0.0 ? xn.value[i] : 0.0;
  return Tensor(make_node(xn.shape, std::move(out), {x.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    ensure_grad(in);
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (in.value[i] > 0.0) in.grad[i] += self.grad[i];
    }
  }));
}

Tensor scale(const Tensor& x, double s) {
  const Node& xn = checked(x, "scale");
  std::vector<double> out(xn.value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * xn.value[i];
  return Tensor(make_node(xn.shape, std::move(out), {x.node()}, [s](Node& self) {
    Node& in = *self.inputs[0];
    ensure_grad(in);
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[i] += s * self.grad[i];
  }));
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const Node& an = checked(a, "concat_cols");
  const Node& bn = checked(b, "concat_cols");
  require_matrix(an, "concat_cols");
  require_matrix(bn, "concat_cols");
  const std::size_t n = an.shape[0], ma = an.shape[1], mb = bn.shape[1];
  if (bn.shape[0] != n) throw ShapeError("concat_cols: row counts differ");
  const std::size_t m = ma + mb;
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(an.value.begin() + i * ma, ma, out.begin() + i * m);
    std::copy_n(bn.value.begin() + i * mb, mb, out.begin() + i * m + ma);
  }
  return Tensor(make_node({n, m}, std::move(out), {a.node(), b.node()}, [n, ma, mb, m](Node& self) {
    Node& left = *self.inputs[0];
    Node& right = *self.inputs[1];
    if (left.requires_grad) ensure_grad(left);
    if (right.requires_grad) ensure_grad(right);
    for (std::size_t i = 0; i < n; ++i) {
      if (left.requires_grad) {
        for (std::size_t j = 0; j < ma; ++j) left.grad[i * ma + j] += self.grad[i * m + j];
      }
      if (right.requires_grad) {
        for (std::size_t j = 0; j < mb; ++j) right.grad[i * mb + j] += self.grad[i * m + ma + j];
      }
    }
  }));
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  const Node& xn = checked(x, "slice_rows");
  require_matrix(xn, "slice_rows");
  if (begin >= end || end > xn.shape[0]) {
    throw ShapeError("slice_rows: invalid range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") for " + shape_string(xn.shape));
  }
  const std::size_t m = xn.shape[1];
  std::vector<double> out(xn.value.begin() + begin * m, xn.value.begin() + end * m);
  return Tensor(make_node({end - begin, m}, std::move(out), {x.node()}, [begin, m](Node& self) {
    Node& in = *self.inputs[0];
    ensure_grad(in);
    for (std::size_t i = 0; i < self.grad.size(); ++i) in.grad[begin * m + i] += self.grad[i];
  }));
}

void softmax_row(std::span<const double> row, std::span<double> out) {
  const double mx = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    out[j] = std::exp(row[j] - mx);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

Tensor softmax_rows(const Tensor& x) {
  const Node& xn = checked(x, "softmax_rows");
  require_matrix(xn, "softmax_rows");
  const std::size_t n = xn.shape[0], m = xn.shape[1];
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    softmax_row(std::span<const double>(xn.value).subspan(i * m, m), std::span<double>(out).subspan(i * m, m));
  }
  return Tensor(make_node({n, m}, std::move(out), {x.node()}, [n, m](Node& self) {
    Node& in = *self.inputs[0];
    ensure_grad(in);
    // dx_j = s_j * (g_j - sum_l g_l s_l)
    for (std::size_t i = 0; i < n; ++i) {
      const double* s = self.value.data() + i * m;
      const double* g = self.grad.data() + i * m;
      double inner = 0.0;
      for (std::size_t j = 0; j < m; ++j) inner += g[j] * s[j];
      for (std::size_t j = 0; j < m; ++j) in.grad[i * m + j] += s[j] * (g[j] - inner);
    }
  }));
}

Tensor sum(const Tensor& x) {
  const Node& xn = checked(x, "sum");
  double total = 0.0;
  for (double v : xn.value) total += v;
  return Tensor(make_node({1}, {total}, {x.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    ensure_grad(in);
    for (double& g : in.grad) g += self.grad[0];
  }));
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const Node& ln = checked(logits, "cross_entropy");
  require_matrix(ln, "cross_entropy");
  const std::size_t n = ln.shape[0], k = ln.shape[1];
  if (labels.size() != n) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                     " rows");
  }
  std::vector<int> owned(labels.begin(), labels.end());
  for (int y : owned) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw LabelError("cross_entropy: label " + std::to_string(y) + " outside [0, " + std::to_string(k) + ")");
    }
  }
  std::vector<double> probs(n * k);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> row(ln.value.data() + i * k, k);
    softmax_row(row, std::span<double>(probs).subspan(i * k, k));
    // log-softmax directly from the logits keeps -log p finite when p underflows.
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - mx);
    loss -= row[owned[i]] - mx - std::log(total);
  }
  loss /= static_cast<double>(n);
  return Tensor(make_node({1}, {loss}, {logits.node()},
                          [n, k, probs = std::move(probs), owned = std::move(owned)](Node& self) {
                            Node& in = *self.inputs[0];
                            ensure_grad(in);
                            const double g = self.grad[0] / static_cast<double>(n);
                            for (std::size_t i = 0; i < n; ++i) {
                              for (std::size_t j = 0; j < k; ++j) {
                                const double target = static_cast<int>(j) == owned[i] ? 1.0 : 0.0;
                                in.grad[i * k + j] += g * (probs[i * k + j] - target);
                              }
                            }
                          }));
}

double tanh_scalar(double x) { return std::tanh(x); }

// ---------------------------------------------------------------------------
// Reverse pass

void backward(const Tensor& loss) {
  const Node& root = checked(loss, "backward");
  if (root.value.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(root.shape));
  }
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  Node* root_ptr = loss.node().get();
  stack.emplace_back(root_ptr, 0);
  seen.insert(root_ptr);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.assign(n->value.size(), 0.0);
  root_ptr->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

}  // namespace gmp::ad
