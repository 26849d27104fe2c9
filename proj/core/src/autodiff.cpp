#include "sharp/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <unordered_set>

namespace sharp::ad {

namespace {

thread_local bool grad_enabled = true;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}
MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shapes " + to_string(a) + " and " + to_string(b) +
                   " do not conform");
}

// Broadcast plan over a rows x cols output. Operand element (r, c) lives at
// r * row_stride + c * col_stride.
struct Broadcast {
  Shape out;
  std::size_t rows = 1, cols = 1;
  std::size_t a_rs = 0, a_cs = 0, b_rs = 0, b_cs = 0;
};

void view2d(const Shape& s, std::size_t& rows, std::size_t& cols) {
  if (s.empty()) {
    rows = cols = 1;
  } else if (s.size() == 1) {
    rows = 1;
    cols = s[0];
  } else {
    rows = s[0];
    cols = element_count(s) / std::max<std::size_t>(s[0], 1);
  }
}

bool is_row_of(const Shape& small, const Shape& big) {
  if (big.size() != 2) return false;
  if (small.size() == 1) return small[0] == big[1];
  return small.size() == 2 && small[0] == 1 && small[1] == big[1];
}

bool is_col_of(const Shape& small, const Shape& big) {
  return big.size() == 2 && small.size() == 2 && small[1] == 1 && small[0] == big[0];
}

Broadcast plan(const char* op, const Shape& a, const Shape& b) {
  Broadcast p;
  const std::size_t na = element_count(a), nb = element_count(b);
  auto full = [](std::size_t cols, std::size_t& rs, std::size_t& cs) {
    rs = cols;
    cs = 1;
  };
  if (a == b) {
    p.out = a;
    view2d(a, p.rows, p.cols);
    full(p.cols, p.a_rs, p.a_cs);
    full(p.cols, p.b_rs, p.b_cs);
  } else if (nb == 1) {
    p.out = a;
    view2d(a, p.rows, p.cols);
    full(p.cols, p.a_rs, p.a_cs);
  } else if (na == 1) {
    p.out = b;
    view2d(b, p.rows, p.cols);
    full(p.cols, p.b_rs, p.b_cs);
  } else if (is_row_of(b, a)) {
    p.out = a;
    view2d(a, p.rows, p.cols);
    full(p.cols, p.a_rs, p.a_cs);
    p.b_cs = 1;
  } else if (is_row_of(a, b)) {
    p.out = b;
    view2d(b, p.rows, p.cols);
    full(p.cols, p.b_rs, p.b_cs);
    p.a_cs = 1;
  } else if (is_col_of(b, a)) {
    p.out = a;
    view2d(a, p.rows, p.cols);
    full(p.cols, p.a_rs, p.a_cs);
    p.b_rs = 1;
  } else if (is_col_of(a, b)) {
    p.out = b;
    view2d(b, p.rows, p.cols);
    full(p.cols, p.b_rs, p.b_cs);
    p.a_rs = 1;
  } else {
    shape_mismatch(op, a, b);
  }
  return p;
}

// f(x, y) -> value; df(x, y, out) -> {d/dx, d/dy}.
template <class F, class DF>
Var binary(const char* op, const Var& a, const Var& b, F f, DF df) {
  const Broadcast p = plan(op, a.shape(), b.shape());
  Tensor out(p.out);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t r = 0; r < p.rows; ++r) {
    for (std::size_t c = 0; c < p.cols; ++c) {
      out[r * p.cols + c] = f(av[r * p.a_rs + c * p.a_cs], bv[r * p.b_rs + c * p.b_cs]);
    }
  }
  return make_op(std::move(out), {a, b}, [p, df](Node& self) {
    const Tensor& x = self.parents[0]->value;
    const Tensor& y = self.parents[1]->value;
    Tensor* gx = self.parent_grad(0);
    Tensor* gy = self.parent_grad(1);
    for (std::size_t r = 0; r < p.rows; ++r) {
      for (std::size_t c = 0; c < p.cols; ++c) {
        const std::size_t o = r * p.cols + c;
        const std::size_t ia = r * p.a_rs + c * p.a_cs;
        const std::size_t ib = r * p.b_rs + c * p.b_cs;
        const auto [dx, dy] = df(x[ia], y[ib], self.value[o]);
        const double g = self.grad[o];
        if (gx) (*gx)[ia] += g * dx;
        if (gy) (*gy)[ib] += g * dy;
      }
    }
  });
}

// f(x) -> value; df(x, out) -> derivative.
template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  Tensor out(a.shape());
  const auto& av = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
  return make_op(std::move(out), {a}, [df](Node& self) {
    Tensor* gx = self.parent_grad(0);
    if (!gx) return;
    const Tensor& x = self.parents[0]->value;
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      (*gx)[i] += self.grad[i] * df(x[i], self.value[i]);
    }
  });
}

void require_matrix(const char* op, const Var& a) {
  if (a.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got shape " + to_string(a.shape()));
  }
}

}  // namespace

Tensor* Node::parent_grad(std::size_t i) {
  Node& p = *parents[i];
  if (!p.requires_grad) return nullptr;
  if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
  return &p.grad;
}

Var Var::parameter(Tensor value, std::string name) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->grad = Tensor(node->value.shape());
  node->requires_grad = true;
  node->name = std::move(name);
  return Var(std::move(node));
}

Var Var::constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

const Tensor& Var::grad() const {
  if (node_->grad.shape() != node_->value.shape()) node_->grad = Tensor(node_->value.shape());
  return node_->grad;
}

void Var::zero_grad() {
  if (node_->grad.shape() != node_->value.shape()) {
    node_->grad = Tensor(node_->value.shape());
  } else {
    node_->grad.fill(0.0);
  }
}

NoGradGuard::NoGradGuard() : previous_(grad_enabled) { grad_enabled = false; }
NoGradGuard::~NoGradGuard() { grad_enabled = previous_; }

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  const bool track = grad_enabled &&
      std::any_of(parents.begin(), parents.end(), [](const Var& v) { return v.requires_grad(); });
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.ptr());
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + to_string(loss.shape()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order; each node once.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node(), 0);
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->grad.shape() != n->value.shape()) {
      n->grad = Tensor(n->value.shape());
    } else {
      n->grad.fill(0.0);
    }
  }
  loss.node()->grad.fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

std::vector<Tensor> gradients(const Var& loss, std::span<const Var> params) {
  for (const auto& p : params) const_cast<Var&>(p).zero_grad();
  backward(loss);
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.grad());
  return out;
}

// ---- arithmetic ----

Var add(const Var& a, const Var& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return std::pair{1.0, 1.0}; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return std::pair{1.0, -1.0}; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double) { return std::pair{y, x}; });
}

Var div(const Var& a, const Var& b) {
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double out) { return std::pair{1.0 / y, -out / y}; });
}

Var neg(const Var& a) {
  return unary(a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(const Var& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.shape()[1] != b.shape()[0]) shape_mismatch("matmul", a.shape(), b.shape());
  Tensor out(Shape{a.shape()[0], b.shape()[1]});
  as_matrix(out).noalias() = as_matrix(a.value()) * as_matrix(b.value());
  return make_op(std::move(out), {a, b}, [](Node& self) {
    const auto g = as_matrix(std::as_const(self.grad));
    if (Tensor* ga = self.parent_grad(0)) {
      as_matrix(*ga).noalias() += g * as_matrix(self.parents[1]->value).transpose();
    }
    if (Tensor* gb = self.parent_grad(1)) {
      as_matrix(*gb).noalias() += as_matrix(self.parents[0]->value).transpose() * g;
    }
  });
}

// ---- elementwise ----

Var relu(const Var& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Var exp(const Var& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(const Var& a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var abs(const Var& a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var pow(const Var& a, double exponent) {
  return unary(
      a, [exponent](double x) { return std::pow(x, exponent); },
      [exponent](double x, double) {
        if (x == 0.0) return exponent == 1.0 ? 1.0 : 0.0;
        return exponent * std::pow(x, exponent - 1.0);
      });
}

Var square(const Var& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sin(const Var& a) {
  return unary(a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Var cos(const Var& a) {
  return unary(
      a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Var lgamma(const Var& a) {
  return unary(
      a, [](double x) { return std::lgamma(x); },
      [](double x, double) { return boost::math::digamma(x); });
}

// ---- reductions ----

Var sum(const Var& a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return make_op(Tensor::scalar(total), {a}, [](Node& self) {
    Tensor* gx = self.parent_grad(0);
    if (!gx) return;
    const double g = self.grad[0];
    for (auto& v : gx->data()) v += g;
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return make_op(Tensor::scalar(total / n), {a}, [n](Node& self) {
    Tensor* gx = self.parent_grad(0);
    if (!gx) return;
    const double g = self.grad[0] / n;
    for (auto& v : gx->data()) v += g;
  });
}

Var sum_cols(const Var& a) {
  require_matrix("sum_cols", a);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  Tensor out(Shape{m, 1});
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += a.value()[r * n + c];
    out[r] = s;
  }
  return make_op(std::move(out), {a}, [m, n](Node& self) {
    Tensor* gx = self.parent_grad(0);
    if (!gx) return;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) (*gx)[r * n + c] += self.grad[r];
    }
  });
}

Var log_softmax(const Var& logits) {
  require_matrix("log_softmax", logits);
  const std::size_t m = logits.shape()[0], k = logits.shape()[1];
  Tensor out(logits.shape());
  const auto& x = logits.value();
  for (std::size_t r = 0; r < m; ++r) {
    double hi = x[r * k];
    for (std::size_t c = 1; c < k; ++c) hi = std::max(hi, x[r * k + c]);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(x[r * k + c] - hi);
    const double lse = hi + std::log(z);
    for (std::size_t c = 0; c < k; ++c) out[r * k + c] = x[r * k + c] - lse;
  }
  return make_op(std::move(out), {logits}, [m, k](Node& self) {
    Tensor* gx = self.parent_grad(0);
    if (!gx) return;
    for (std::size_t r = 0; r < m; ++r) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < k; ++c) gsum += self.grad[r * k + c];
      for (std::size_t c = 0; c < k; ++c) {
        (*gx)[r * k + c] += self.grad[r * k + c] - std::exp(self.value[r * k + c]) * gsum;
      }
    }
  });
}

Var softmax(const Var& logits) { return exp(log_softmax(logits)); }

// ---- structure ----

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", a);
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  if (begin > end || end > n) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside shape " + to_string(a.shape()));
  }
  const std::size_t w = end - begin;
  Tensor out(Shape{m, w});
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = a.value()[r * n + begin + c];
  }
  return make_op(std::move(out), {a}, [m, n, w, begin](Node& self) {
    Tensor* gx = self.parent_grad(0);
    if (!gx) return;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < w; ++c) (*gx)[r * n + begin + c] += self.grad[r * w + c];
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  for (const auto& p : parts) require_matrix("concat_cols", p);
  const std::size_t m = parts[0].shape()[0];
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.shape()[0] != m) shape_mismatch("concat_cols", parts[0].shape(), p.shape());
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  Tensor out(Shape{m, total});
  std::size_t offset = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::size_t w = widths[i];
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < w; ++c) out[r * total + offset + c] = parts[i].value()[r * w + c];
    }
    offset += w;
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return make_op(std::move(out), std::move(parents), [m, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      const std::size_t w = widths[i];
      if (Tensor* g = self.parent_grad(i)) {
        for (std::size_t r = 0; r < m; ++r) {
          for (std::size_t c = 0; c < w; ++c) (*g)[r * w + c] += self.grad[r * total + off + c];
        }
      }
      off += w;
    }
  });
}

Var detach(const Var& a) { return Var::constant(a.value()); }

}  // namespace sharp::ad
