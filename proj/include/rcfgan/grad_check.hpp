#pragma once

// Central finite-difference checks of the reverse-mode gradients.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rcfgan/ecf.hpp"
#include "rcfgan/freq_sampler.hpp"
#include "rcfgan/networks.hpp"
#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

struct GradCheckResult {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double tolerance = 0.0;
  bool passed() const { return relative_error <= tolerance; }
};

// `loss` must rebuild the graph from `inputs` on every call.
inline double gradient_relative_error(std::vector<Tensor>& inputs, const std::function<Tensor()>& loss,
                                      double step = 1e-5) {
  for (auto& t : inputs) t.zero_grad();
  backward(loss());
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (auto& t : inputs) {
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) analytic.assign(t.grad().begin(), t.grad().end());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      double plus, minus;
      {
        NoGradGuard no_grad;
        data[i] = orig + step;
        plus = loss().item();
        data[i] = orig - step;
        minus = loss().item();
      }
      data[i] = orig;
      const double numeric = (plus - minus) / (2.0 * step);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
    t.zero_grad();
  }
  const double denom = std::sqrt(std::max(a2, n2));
  return denom > 0.0 ? std::sqrt(diff2) / denom : std::sqrt(diff2);
}

namespace detail {

// Uniform in [lo, hi], nudged out of (-gap, gap) when gap > 0.
inline Tensor random_input(Shape shape, Rng& rng, double lo, double hi, double gap = 0.0) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) {
    do {
      x = lo + (hi - lo) * rng.uniform();
    } while (gap > 0.0 && std::abs(x) < gap);
  }
  return Tensor::from(std::move(shape), std::move(v), true);
}

}  // namespace detail

// Every differentiable operation plus an MLP and the end-to-end CF distance.
inline std::vector<GradCheckResult> run_gradient_checks(std::uint64_t seed = 0, double op_tol = 1e-5,
                                                        double e2e_tol = 1e-4) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  auto weights = [&](const Shape& s) {
    Tensor w = detail::random_input(s, rng, -1.0, 1.0);
    w.set_requires_grad(false);
    return w;
  };
  auto check = [&](const std::string& name, std::vector<Tensor> inputs, const std::function<Tensor()>& f, double tol) {
    out.push_back({name, gradient_relative_error(inputs, f), tol});
  };

  const std::vector<std::pair<UnaryOp, double>> unary = {
      {UnaryOp::tanh, 0.0},  {UnaryOp::sigmoid, 0.0}, {UnaryOp::relu, 1e-3},     {UnaryOp::cos, 0.0},
      {UnaryOp::sin, 0.0},   {UnaryOp::square, 0.0},  {UnaryOp::neg, 0.0},       {UnaryOp::softplus, 0.0},
      {UnaryOp::exp, 0.0},   {UnaryOp::sqrt_eps, 0.0}};
  for (auto [op, gap] : unary) {
    Tensor x = op == UnaryOp::sqrt_eps ? detail::random_input({3, 4}, rng, 0.05, 2.0)
                                       : detail::random_input({3, 4}, rng, -2.0, 2.0, gap);
    Tensor w = weights({3, 4});
    check(op_name(op), {x}, [x, w, op] { return sum(elementwise(op, x) * w); }, op_tol);
  }
  for (auto op : {BinaryOp::add, BinaryOp::sub, BinaryOp::mul}) {
    Tensor a = detail::random_input({3, 4}, rng, -2.0, 2.0);
    Tensor b = detail::random_input({3, 4}, rng, -2.0, 2.0);
    Tensor s = detail::random_input({}, rng, -2.0, 2.0);
    Tensor w = weights({3, 4});
    check(std::string(op_name(op)), {a, b}, [a, b, w, op] { return sum(elementwise(op, a, b) * w); }, op_tol);
    check(std::string(op_name(op)) + "_scalar", {a, s}, [a, s, w, op] { return sum(elementwise(op, s, a) * w); },
          op_tol);
  }
  {
    Tensor a = detail::random_input({3, 3}, rng, -2.0, 2.0);
    Tensor b = detail::random_input({3, 3}, rng, -2.0, 2.0);
    check("matmul", {a, b}, [a, b] { return sum(matmul(a, b)); }, op_tol);
    Tensor c = detail::random_input({2, 5}, rng, -2.0, 2.0);
    Tensor d = detail::random_input({5, 3}, rng, -2.0, 2.0);
    Tensor w = weights({2, 3});
    check("matmul_rect", {c, d}, [c, d, w] { return sum(matmul(c, d) * w); }, op_tol);
  }
  {
    Tensor a = detail::random_input({3, 4}, rng, -2.0, 2.0);
    Tensor w = weights({4, 3});
    check("transpose", {a}, [a, w] { return sum(transpose(a) * w); }, op_tol);
    Tensor b = detail::random_input({4}, rng, -2.0, 2.0);
    Tensor w2 = weights({3, 4});
    check("add_row", {a, b}, [a, b, w2] { return sum(add_row(a, b) * w2); }, op_tol);
    check("scale", {a}, [a, w2] { return sum(scale(a, -1.7) * w2); }, op_tol);
    check("shift", {a}, [a, w2] { return sum(shift(a, 0.3) * w2); }, op_tol);
  }
  {
    Tensor a = detail::random_input({2, 3, 4}, rng, -2.0, 2.0);
    for (std::size_t axis = 0; axis < 3; ++axis) {
      Shape s = a.shape();
      s.erase(s.begin() + static_cast<std::ptrdiff_t>(axis));
      Tensor w = weights(s);
      check("sum_axis" + std::to_string(axis), {a}, [a, w, axis] { return sum(sum(a, axis) * w); }, op_tol);
      check("mean_axis" + std::to_string(axis), {a}, [a, w, axis] { return sum(mean(a, axis) * w); }, op_tol);
    }
    check("mean_all", {a}, [a] { return mean(square(a)); }, op_tol);
  }
  {
    Tensor re = detail::random_input({6}, rng, -2.0, 2.0, 0.1);
    Tensor im = detail::random_input({6}, rng, -2.0, 2.0, 0.1);
    Tensor w = weights({6});
    check("modulus", {re, im}, [re, im, w] { return sum(modulus(re, im) * w); }, op_tol);
  }
  {
    Mlp net(MlpSpec{{3, 5, 4, 2}, Activation::tanh, Activation::tanh, seed + 5, NetRole::critic});
    Tensor x = detail::random_input({6, 3}, rng, -2.0, 2.0);
    Tensor w = weights({6, 2});
    auto params = net.parameters();
    params.push_back(x);
    check("mlp", params, [net, x, w] { return sum(square(net.forward(x) - w)); }, op_tol);
  }
  {
    Tensor a = detail::random_input({16, 2}, rng, -2.0, 2.0);
    Tensor b = detail::random_input({12, 2}, rng, -1.0, 1.5);
    Tensor freqs = detail::random_input({8, 2}, rng, -1.5, 1.5);
    for (double alpha : {0.5, 0.2, 0.9}) {
      CfLossConfig cfg{alpha, 8, kSqrtEps};
      check("cf_distance_alpha" + std::to_string(alpha).substr(0, 3), {a, b, freqs},
            [a, b, freqs, cfg] { return cf_distance(a, b, freqs, cfg); }, e2e_tol);
    }
  }
  {
    // Biases keep the relu units off their kink.
    Mlp tnet(MlpSpec{{2, 2, 2, 2}, Activation::relu, Activation::identity, seed + 7, NetRole::tnet});
    for (std::size_t l = 0; l < tnet.num_layers(); ++l)
      for (auto& v : tnet.bias(l).mutable_data()) v = 0.05;
    Tensor base = sample_fixed(12, 2, 1.0, rng);
    Tensor sigma = sample_fixed(12, 2, 1.0, rng);
    Tensor a = detail::random_input({10, 2}, rng, -1.0, 1.0);
    Tensor b = detail::random_input({10, 2}, rng, -0.5, 1.5);
    const CfLossConfig cfg{0.5, 12, kSqrtEps};
    check("tnet_mixture_cf_distance", tnet.parameters(),
          [tnet, base, sigma, a, b, cfg] { return cf_distance(a, b, sample_mixture(base, sigma, tnet), cfg); },
          e2e_tol);
  }
  return out;
}

}  // namespace rcfgan
