#pragma once

// Reverse-mode automatic differentiation over a define-by-run graph.
//
// Every op returns a Var holding its forward value and, when any operand
// requires a gradient, a closure that scatters the output gradient into the
// operands. backward() walks the graph once in reverse topological order;
// gradients accumulate additively, so a node used twice receives both
// contributions.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sharp/tensor.hpp"

namespace sharp::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // allocated on the first backward pass that reaches the node
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;
  std::string name;

  /// Gradient buffer of parent i, or nullptr when that parent is constant.
  Tensor* parent_grad(std::size_t i);
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  /// A leaf that receives gradients.
  static Var parameter(Tensor value, std::string name = {});
  /// A leaf excluded from differentiation.
  static Var constant(Tensor value);

  bool valid() const noexcept { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  /// Writable value, used by optimizers on parameter leaves.
  Tensor& value_mut() { return node_->value; }
  /// dLoss/dself after backward(); zeros if backward never reached this node.
  const Tensor& grad() const;
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  const std::string& name() const { return node_->name; }
  double item() const { return node_->value.item(); }
  void zero_grad();

  Node* node() const noexcept { return node_.get(); }
  const NodePtr& ptr() const noexcept { return node_; }

 private:
  NodePtr node_;
};

/// While alive, ops on this thread record no backward closures. Used for
/// inference paths such as projection.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Records an op node. `backward` is only kept if some parent requires a
/// gradient; otherwise the result is a constant.
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward);

/// Runs reverse accumulation from a scalar loss. Gradients of every node
/// reachable from the loss are reset before accumulation.
void backward(const Var& loss);

/// backward(loss) followed by collecting dLoss/dParam for each parameter;
/// parameters the loss does not depend on get zeros.
std::vector<Tensor> gradients(const Var& loss, std::span<const Var> params);

// ---- arithmetic, broadcasting the smaller operand across the larger ----
// Conforming pairs: equal shapes; either side a single element; a [m, n]
// matrix against a [n] or [1, n] row; a [m, n] matrix against a [m, 1]
// column.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var neg(const Var& a);
Var scale(const Var& a, double factor);
Var add_scalar(const Var& a, double offset);

/// [m, k] x [k, n] -> [m, n].
Var matmul(const Var& a, const Var& b);

// ---- elementwise ----
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var abs(const Var& a);
Var pow(const Var& a, double exponent);
Var square(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var lgamma(const Var& a);

// ---- reductions ----
Var sum(const Var& a);
Var mean(const Var& a);
/// Row sums of a [m, n] matrix as a [m, 1] column.
Var sum_cols(const Var& a);

/// Row-wise log-softmax of [m, K] logits.
Var log_softmax(const Var& logits);
Var softmax(const Var& logits);

// ---- structure ----
/// Columns [begin, end) of a [m, n] matrix.
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
/// Horizontal concatenation of matrices with equal row counts.
Var concat_cols(std::span<const Var> parts);
/// Same value, no gradient path.
Var detach(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& a) { return neg(a); }

}  // namespace sharp::ad
