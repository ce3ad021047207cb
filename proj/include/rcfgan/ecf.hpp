#pragma once

// Empirical characteristic functions and the CF loss family.
//
//   ECF:      phi(t) = (1/n) sum_i exp(j t^T x_i)
//   c(t)    = |phi_X(t) - phi_Y(t)|^2
//   c_a(t)  = a (|phi_X| - |phi_Y|)^2 + (1 - a) 2 |phi_X||phi_Y| (1 - cos(angle_X - angle_Y))
//   C_T     = (1/k) sum_j sqrt(c_a(t_j) + eps)
//
// The phase term is evaluated as c(t) - (|phi_X| - |phi_Y|)^2, which equals
// 2|phi_X||phi_Y|(1 - cos(angle_X - angle_Y)) identically. No angle or division
// enters the differentiable path, identical inputs give exactly zero, and
// alpha = 0.5 gives exactly c/2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rcfgan/tensor.hpp"

namespace rcfgan {

// ECF values at k frequencies; re/im have shape [k], freqs [k x m].
struct EcfEval {
  Tensor re;
  Tensor im;
  Tensor freqs;

  std::size_t size() const { return re.numel(); }
};

struct CfLossConfig {
  double alpha = 0.5;
  std::size_t num_freqs = 64;
  double epsilon = kSqrtEps;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    if (num_freqs < 1) throw std::invalid_argument("num_freqs must be at least 1");
    if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  }
};

inline EcfEval ecf(const Tensor& samples, const Tensor& freqs) {
  if (samples.rank() != 2 || freqs.rank() != 2 || samples.dim(1) != freqs.dim(1)) {
    throw DimensionError("ecf: samples " + shape_str(samples.shape()) + " and frequencies " +
                         shape_str(freqs.shape()) + " must be [n x m] and [k x m]");
  }
  if (samples.dim(0) == 0) throw DimensionError("ecf: empty sample set");
  Tensor proj = matmul(samples, transpose(freqs));  // [n x k]
  return EcfEval{mean(cos(proj), 0), mean(sin(proj), 0), freqs};
}

namespace detail {

inline bool same_freqs(const Tensor& a, const Tensor& b) {
  if (a.same_storage(b)) return true;
  if (a.shape() != b.shape()) return false;
  auto x = a.data();
  auto y = b.data();
  return std::equal(x.begin(), x.end(), y.begin());
}

inline void require_shared_freqs(const EcfEval& a, const EcfEval& b, const char* who) {
  if (!same_freqs(a.freqs, b.freqs)) {
    throw DimensionError(std::string(who) + ": ECFs were evaluated at different frequencies");
  }
}

}  // namespace detail

inline Tensor c_of_t(const EcfEval& a, const EcfEval& b) {
  detail::require_shared_freqs(a, b, "c_of_t");
  return square(a.re - b.re) + square(a.im - b.im);
}

// Amplitude part (|phi_X| - |phi_Y|)^2 and phase part 2|phi_X||phi_Y|(1 - cos dphase).
struct CfTerms {
  Tensor amplitude;
  Tensor phase;
};

inline CfTerms cf_terms(const EcfEval& a, const EcfEval& b) {
  detail::require_shared_freqs(a, b, "cf_terms");
  Tensor amplitude = square(modulus(a.re, a.im) - modulus(b.re, b.im));
  Tensor c = square(a.re - b.re) + square(a.im - b.im);
  return CfTerms{amplitude, c - amplitude};
}

inline Tensor c_alpha_of_t(const EcfEval& a, const EcfEval& b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("c_alpha_of_t: alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  CfTerms terms = cf_terms(a, b);
  return scale(terms.amplitude, alpha) + scale(terms.phase, 1.0 - alpha);
}

// Monte Carlo CF distance with both ECFs sharing one frequency draw.
inline Tensor cf_distance(const Tensor& a_samples, const Tensor& b_samples, const Tensor& freqs,
                          const CfLossConfig& config) {
  config.validate();
  if (a_samples.rank() != 2 || b_samples.rank() != 2 || a_samples.dim(0) == 0 || b_samples.dim(0) == 0) {
    throw DimensionError("cf_distance: empty sample set (" + shape_str(a_samples.shape()) + ", " +
                         shape_str(b_samples.shape()) + ")");
  }
  EcfEval ea = ecf(a_samples, freqs);
  EcfEval eb = ecf(b_samples, freqs);
  Tensor c = c_alpha_of_t(ea, eb, config.alpha);
  Tensor root = config.epsilon == kSqrtEps ? sqrt_eps(c) : sqrt_eps(shift(c, config.epsilon - kSqrtEps));
  return mean(root);
}

// Principal angle in (-pi, pi]; defined as 0 where the modulus is below kModulusFloor.
inline double principal_phase(double re, double im) {
  if (std::sqrt(re * re + im * im) < kModulusFloor) return 0.0;
  double a = std::atan2(im, re);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

// Diagnostic view only; never used inside a loss.
inline std::pair<std::vector<double>, std::vector<double>> amplitude_phase(const EcfEval& e) {
  const std::size_t k = e.size();
  std::vector<double> amp(k), phase(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double re = e.re[j], im = e.im[j];
    amp[j] = std::sqrt(re * re + im * im);
    phase[j] = principal_phase(re, im);
  }
  return {std::move(amp), std::move(phase)};
}

// Per-frequency c_alpha from plain ECF values, the same expression as the
// tensor path. Used by the value-only routines in diagnostics.
inline double c_alpha_value(double re_a, double im_a, double re_b, double im_b, double alpha) {
  const double d = std::sqrt(re_a * re_a + im_a * im_a) - std::sqrt(re_b * re_b + im_b * im_b);
  const double dre = re_a - re_b;
  const double dim = im_a - im_b;
  const double amplitude = d * d;
  const double c = dre * dre + dim * dim;
  return alpha * amplitude + (1.0 - alpha) * (c - amplitude);
}

}  // namespace rcfgan
