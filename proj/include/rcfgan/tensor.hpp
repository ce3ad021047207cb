#pragma once

// Dense float64 tensors with define-by-run reverse-mode differentiation.
//
// A Tensor is a cheap handle onto shared storage. Operations whose inputs
// require gradients record a node holding the backward rule; backward() walks
// the recorded nodes in reverse recording order and accumulates gradients into
// every requires_grad leaf. The graph is released after the walk, so each
// forward pass supports exactly one backward call.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace rcfgan {

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

// Added to the argument of sqrt_eps so the CF loss stays differentiable at c = 0.
inline constexpr double kSqrtEps = 1e-12;

// Gradient of modulus() is set to zero below this magnitude.
inline constexpr double kModulusFloor = 1e-12;

namespace detail {

struct TensorImpl;

struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // Receives the output tensor (its grad is the upstream gradient).
  std::function<void(const TensorImpl&)> backward;
  std::uint64_t seq = 0;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // empty when absent
  std::shared_ptr<Node> node;
  bool graph_released = false;

  void accumulate(std::size_t i, double g) {
    if (!requires_grad) return;
    if (grad.empty()) grad.assign(data.size(), 0.0);
    grad[i] += g;
  }
};

inline thread_local int no_grad_depth = 0;
inline thread_local std::uint64_t next_seq = 0;

}  // namespace detail

inline bool grad_enabled() { return detail::no_grad_depth == 0; }

// Disables graph recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() { ++detail::no_grad_depth; }
  ~NoGradGuard() { --detail::no_grad_depth; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

class Tensor {
 public:
  Tensor() : impl_(std::make_shared<detail::TensorImpl>()) { impl_->data.assign(1, 0.0); }

  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor shape " + shape_str(shape) + " holds " +
                           std::to_string(shape_numel(shape)) + " values, got " +
                           std::to_string(data.size()));
    }
    Tensor t;
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor ones(Shape shape, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, 1.0), requires_grad);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return from({}, {value}, requires_grad);
  }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }

  std::span<const double> data() const { return impl_->data; }
  // In-place access for optimizer updates between iterations.
  std::span<double> mutable_data() { return impl_->data; }

  double item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
  }
  double operator[](std::size_t i) const { return impl_->data[i]; }
  double at(std::size_t row, std::size_t col) const {
    return impl_->data[row * impl_->shape.at(1) + col];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  bool is_leaf() const { return impl_->node == nullptr; }

  // Same values, no history, no gradient requirement.
  Tensor detach() const { return from(shape(), impl_->data, false); }

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  // Internal: used by operation implementations.
  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<detail::TensorImpl> impl_;
};

namespace detail {

// Builds the output tensor and records a node when any input needs gradients.
inline Tensor make_result(Shape shape, std::vector<double> data,
                          std::initializer_list<const Tensor*> inputs,
                          std::function<void(const TensorImpl&)> backward) {
  Tensor out = Tensor::from(std::move(shape), std::move(data));
  if (!grad_enabled()) return out;
  bool needs = false;
  for (const Tensor* in : inputs) needs = needs || in->requires_grad();
  if (!needs) return out;
  auto node = std::make_shared<Node>();
  for (const Tensor* in : inputs) node->inputs.push_back(in->impl());
  node->backward = std::move(backward);
  node->seq = ++next_seq;
  out.impl()->requires_grad = true;
  out.impl()->node = std::move(node);
  return out;
}

inline bool is_scalar_like(const Tensor& t) { return t.numel() == 1; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise operations

enum class UnaryOp { tanh, sigmoid, relu, cos, sin, sqrt_eps, square, neg, softplus, exp };
enum class BinaryOp { add, sub, mul };

inline const char* op_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::tanh: return "tanh";
    case UnaryOp::sigmoid: return "sigmoid";
    case UnaryOp::relu: return "relu";
    case UnaryOp::cos: return "cos";
    case UnaryOp::sin: return "sin";
    case UnaryOp::sqrt_eps: return "sqrt_eps";
    case UnaryOp::square: return "square";
    case UnaryOp::neg: return "neg";
    case UnaryOp::softplus: return "softplus";
    case UnaryOp::exp: return "exp";
  }
  return "?";
}

inline const char* op_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
  }
  return "?";
}

namespace detail {

inline double softplus(double x) {
  // log(1 + e^x) without overflow for large x.
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double unary_value(UnaryOp op, double x) {
  switch (op) {
    case UnaryOp::tanh: return std::tanh(x);
    case UnaryOp::sigmoid: return sigmoid(x);
    case UnaryOp::relu: return x > 0 || std::isnan(x) ? x : 0.0;
    case UnaryOp::cos: return std::cos(x);
    case UnaryOp::sin: return std::sin(x);
    case UnaryOp::sqrt_eps: return std::sqrt(x + kSqrtEps);
    case UnaryOp::square: return x * x;
    case UnaryOp::neg: return -x;
    case UnaryOp::softplus: return softplus(x);
    case UnaryOp::exp: return std::exp(x);
  }
  return 0.0;
}

// Derivative given input x and output y.
inline double unary_derivative(UnaryOp op, double x, double y) {
  switch (op) {
    case UnaryOp::tanh: return 1.0 - y * y;
    case UnaryOp::sigmoid: return y * (1.0 - y);
    case UnaryOp::relu: return x > 0 ? 1.0 : 0.0;
    case UnaryOp::cos: return -std::sin(x);
    case UnaryOp::sin: return std::cos(x);
    case UnaryOp::sqrt_eps: return 0.5 / y;
    case UnaryOp::square: return 2.0 * x;
    case UnaryOp::neg: return -1.0;
    case UnaryOp::softplus: return sigmoid(x);
    case UnaryOp::exp: return y;
  }
  return 0.0;
}

}  // namespace detail

inline Tensor elementwise(UnaryOp op, const Tensor& a) {
  auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = detail::unary_value(op, in[i]);
  auto ai = a.impl();
  return detail::make_result(a.shape(), std::move(out), {&a}, [ai, op](const detail::TensorImpl& o) {
    for (std::size_t i = 0; i < o.data.size(); ++i) {
      ai->accumulate(i, o.grad[i] * detail::unary_derivative(op, ai->data[i], o.data[i]));
    }
  });
}

// Equal shapes, or one side holding a single value.
inline Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  const bool same = a.shape() == b.shape();
  const bool a_scalar = !same && detail::is_scalar_like(a);
  const bool b_scalar = !same && !a_scalar && detail::is_scalar_like(b);
  if (!same && !a_scalar && !b_scalar) {
    throw DimensionError(std::string(op_name(op)) + ": cannot broadcast " + shape_str(a.shape()) +
                         " with " + shape_str(b.shape()));
  }
  const Shape& shape = a_scalar ? b.shape() : a.shape();
  const std::size_t n = shape_numel(shape);
  auto ad = a.data();
  auto bd = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ad[a_scalar ? 0 : i];
    const double y = bd[b_scalar ? 0 : i];
    switch (op) {
      case BinaryOp::add: out[i] = x + y; break;
      case BinaryOp::sub: out[i] = x - y; break;
      case BinaryOp::mul: out[i] = x * y; break;
    }
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return detail::make_result(shape, std::move(out), {&a, &b},
                             [ai, bi, op, a_scalar, b_scalar](const detail::TensorImpl& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const std::size_t ia = a_scalar ? 0 : i;
      const std::size_t ib = b_scalar ? 0 : i;
      const double g = o.grad[i];
      switch (op) {
        case BinaryOp::add:
          ai->accumulate(ia, g);
          bi->accumulate(ib, g);
          break;
        case BinaryOp::sub:
          ai->accumulate(ia, g);
          bi->accumulate(ib, -g);
          break;
        case BinaryOp::mul:
          ai->accumulate(ia, g * bi->data[ib]);
          bi->accumulate(ib, g * ai->data[ia]);
          break;
      }
    }
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
inline Tensor tanh(const Tensor& a) { return elementwise(UnaryOp::tanh, a); }
inline Tensor sigmoid(const Tensor& a) { return elementwise(UnaryOp::sigmoid, a); }
inline Tensor relu(const Tensor& a) { return elementwise(UnaryOp::relu, a); }
inline Tensor cos(const Tensor& a) { return elementwise(UnaryOp::cos, a); }
inline Tensor sin(const Tensor& a) { return elementwise(UnaryOp::sin, a); }
inline Tensor sqrt_eps(const Tensor& a) { return elementwise(UnaryOp::sqrt_eps, a); }
inline Tensor square(const Tensor& a) { return elementwise(UnaryOp::square, a); }
inline Tensor neg(const Tensor& a) { return elementwise(UnaryOp::neg, a); }
inline Tensor softplus(const Tensor& a) { return elementwise(UnaryOp::softplus, a); }
inline Tensor exp(const Tensor& a) { return elementwise(UnaryOp::exp, a); }

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }

// Multiply by a constant.
inline Tensor scale(const Tensor& a, double factor) {
  auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = factor * in[i];
  auto ai = a.impl();
  return detail::make_result(a.shape(), std::move(out), {&a}, [ai, factor](const detail::TensorImpl& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) ai->accumulate(i, factor * o.grad[i]);
  });
}

// Add a constant.
inline Tensor shift(const Tensor& a, double offset) {
  auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] + offset;
  auto ai = a.impl();
  return detail::make_result(a.shape(), std::move(out), {&a}, [ai](const detail::TensorImpl& o) {
    for (std::size_t i = 0; i < o.grad.size(); ++i) ai->accumulate(i, o.grad[i]);
  });
}

// sqrt(re^2 + im^2); gradient is zero where the modulus is below kModulusFloor.
inline Tensor modulus(const Tensor& re, const Tensor& im) {
  if (re.shape() != im.shape()) {
    throw DimensionError("modulus: shapes " + shape_str(re.shape()) + " and " + shape_str(im.shape()));
  }
  auto r = re.data();
  auto i = im.data();
  std::vector<double> out(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) out[k] = std::sqrt(r[k] * r[k] + i[k] * i[k]);
  auto ri = re.impl();
  auto ii = im.impl();
  return detail::make_result(re.shape(), std::move(out), {&re, &im}, [ri, ii](const detail::TensorImpl& o) {
    for (std::size_t k = 0; k < o.grad.size(); ++k) {
      const double y = o.data[k];
      if (y < kModulusFloor) continue;
      ri->accumulate(k, o.grad[k] * ri->data[k] / y);
      ii->accumulate(k, o.grad[k] * ii->data[k] / y);
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(a.shape()) + " by " + shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), p = a.dim(1), q = b.dim(1);
  auto ad = a.data();
  auto bd = b.data();
  std::vector<double> out(n * q, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) {
      const double aik = ad[i * p + k];
      const double* brow = &bd[k * q];
      double* orow = &out[i * q];
      for (std::size_t j = 0; j < q; ++j) orow[j] += aik * brow[j];
    }
  }
  auto ai = a.impl();
  auto bi = b.impl();
  return detail::make_result({n, q}, std::move(out), {&a, &b}, [ai, bi, n, p, q](const detail::TensorImpl& o) {
    const auto& g = o.grad;
    if (ai->requires_grad) {
      // dA = G * B^T
      if (ai->grad.empty()) ai->grad.assign(n * p, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
          double s = 0.0;
          for (std::size_t j = 0; j < q; ++j) s += g[i * q + j] * bi->data[k * q + j];
          ai->grad[i * p + k] += s;
        }
      }
    }
    if (bi->requires_grad) {
      // dB = A^T * G
      if (bi->grad.empty()) bi->grad.assign(p * q, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < p; ++k) {
          const double aik = ai->data[i * p + k];
          for (std::size_t j = 0; j < q; ++j) bi->grad[k * q + j] += aik * g[i * q + j];
        }
      }
    }
  });
}

inline Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose: expected a matrix, got " + shape_str(a.shape()));
  const std::size_t r = a.dim(0), c = a.dim(1);
  auto ad = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = ad[i * c + j];
  auto ai = a.impl();
  return detail::make_result({c, r}, std::move(out), {&a}, [ai, r, c](const detail::TensorImpl& o) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ai->accumulate(i * c + j, o.grad[j * r + i]);
  });
}

// x[b x n] + bias[n], bias repeated over rows.
inline Tensor add_row(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 2 || bias.numel() != x.dim(1)) {
    throw DimensionError("add_row: cannot add " + shape_str(bias.shape()) + " to rows of " + shape_str(x.shape()));
  }
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  auto xd = x.data();
  auto bd = bias.data();
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = xd[i * cols + j] + bd[j];
  auto xi = x.impl();
  auto bi = bias.impl();
  return detail::make_result(x.shape(), std::move(out), {&x, &bias}, [xi, bi, rows, cols](const detail::TensorImpl& o) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        xi->accumulate(i * cols + j, o.grad[i * cols + j]);
        bi->accumulate(j, o.grad[i * cols + j]);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Reductions

enum class ReduceOp { sum, mean };

inline Tensor reduce(ReduceOp op, const Tensor& t, std::optional<std::size_t> axis = std::nullopt) {
  const Shape& shape = t.shape();
  std::size_t outer = 1, len = t.numel(), inner = 1;
  Shape out_shape;
  if (axis) {
    if (*axis >= shape.size()) {
      throw DimensionError("reduce: axis " + std::to_string(*axis) + " out of range for " + shape_str(shape));
    }
    len = shape[*axis];
    for (std::size_t d = 0; d < *axis; ++d) outer *= shape[d];
    for (std::size_t d = *axis + 1; d < shape.size(); ++d) inner *= shape[d];
    for (std::size_t d = 0; d < shape.size(); ++d)
      if (d != *axis) out_shape.push_back(shape[d]);
  }
  const double factor = (op == ReduceOp::mean && len > 0) ? 1.0 / static_cast<double>(len) : 1.0;
  auto td = t.data();
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t l = 0; l < len; ++l)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += td[(o * len + l) * inner + i];
  if (op == ReduceOp::mean)
    for (auto& v : out) v *= factor;
  auto ti = t.impl();
  return detail::make_result(std::move(out_shape), std::move(out), {&t},
                             [ti, outer, len, inner, factor](const detail::TensorImpl& o) {
    for (std::size_t a = 0; a < outer; ++a)
      for (std::size_t l = 0; l < len; ++l)
        for (std::size_t i = 0; i < inner; ++i)
          ti->accumulate((a * len + l) * inner + i, factor * o.grad[a * inner + i]);
  });
}

inline Tensor sum(const Tensor& t, std::optional<std::size_t> axis = std::nullopt) {
  return reduce(ReduceOp::sum, t, axis);
}
inline Tensor mean(const Tensor& t, std::optional<std::size_t> axis = std::nullopt) {
  return reduce(ReduceOp::mean, t, axis);
}

// ---------------------------------------------------------------------------
// Backward pass

inline void backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw DimensionError("backward: root must be a scalar, got shape " + shape_str(root.shape()));
  }
  const auto& root_impl = root.impl();
  if (!root_impl->node) {
    if (root_impl->graph_released) {
      throw GraphError("backward: graph already consumed; run the forward pass again");
    }
    throw GraphError("backward: root was not produced by a recorded operation");
  }

  // Shared ownership keeps intermediates alive while nodes are released below.
  std::vector<std::shared_ptr<detail::TensorImpl>> order;
  std::vector<std::shared_ptr<detail::TensorImpl>> stack{root_impl};
  std::unordered_set<const detail::TensorImpl*> seen{root_impl.get()};
  while (!stack.empty()) {
    auto cur = std::move(stack.back());
    stack.pop_back();
    for (const auto& in : cur->node->inputs) {
      if (in->node && seen.insert(in.get()).second) stack.push_back(in);
    }
    order.push_back(std::move(cur));
  }
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a->node->seq > b->node->seq; });

  root_impl->grad.assign(1, 1.0);
  for (const auto& impl : order) {
    if (!impl->grad.empty()) impl->node->backward(*impl);
  }
  for (const auto& impl : order) {
    impl->grad.clear();
    impl->node.reset();
    impl->graph_released = true;
  }
}

}  // namespace rcfgan
