#pragma once

// Executable property checks of the CF distance: metric axioms, boundedness,
// agreement with closed-form CFs, the amplitude/phase identity, point-mass
// frequency distributions, small-ball sensitivity and the reciprocal
// (encoder/decoder) equivalence.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rcfgan/datasets.hpp"
#include "rcfgan/ecf.hpp"
#include "rcfgan/freq_sampler.hpp"
#include "rcfgan/networks.hpp"
#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

struct PropertyCheck {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double bound = 0.0;
  std::string counterexample;  // empty when passed
};

struct MetricSuiteConfig {
  std::uint64_t seed = 0;
  std::size_t triples = 500;
  std::size_t set_size = 512;
  std::size_t num_freqs = 64;
  std::size_t cf_samples = 100000;
  std::size_t convergence_reps = 20;
  std::size_t decomposition_pairs = 10000;
  double alpha = 0.5;
  bool fault_flip_sign = false;  // harness self-test: corrupts c(t)
};

struct MetricSuiteReport {
  std::vector<PropertyCheck> checks;
  double max_distance = 0.0;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const PropertyCheck& c) { return c.passed; });
  }
};

inline constexpr double kTriangleTolerance = 1e-9;
inline constexpr double kDecompositionTolerance = 1e-12;
inline constexpr double kDistanceBound = 2.0;
inline constexpr double kBoundSlack = 1e-12;  // covers the sqrt stabilizer at c = 4

namespace detail {

inline Tensor random_set(std::size_t n, std::size_t dim, Rng& rng) {
  static constexpr EllipticalFamily kFamilies[] = {EllipticalFamily::gaussian, EllipticalFamily::laplace,
                                                   EllipticalFamily::student_t, EllipticalFamily::cauchy};
  EllipticalSpec spec;
  spec.family = kFamilies[rng.below(4)];
  spec.nu = 5.0;
  for (std::size_t d = 0; d < dim; ++d) {
    spec.mu.push_back(-2.0 + 4.0 * rng.uniform());
    spec.sigma.push_back(0.01 + 2.0 * rng.uniform());
  }
  return sample_elliptical(spec, n, rng);
}

// Same expression as cf_distance; the fault mode flips the sign of the
// imaginary contribution to c(t).
inline double suite_distance(const Tensor& a, const Tensor& b, const Tensor& freqs, double alpha, bool fault) {
  NoGradGuard no_grad;
  if (!fault) return cf_distance(a, b, freqs, CfLossConfig{alpha, freqs.dim(0), kSqrtEps}).item();
  EcfEval ea = ecf(a, freqs), eb = ecf(b, freqs);
  double s = 0.0;
  for (std::size_t j = 0; j < ea.size(); ++j) {
    const double dre = ea.re[j] - eb.re[j], dim = ea.im[j] - eb.im[j];
    s += std::sqrt(0.5 * (dre * dre - dim * dim) + kSqrtEps);
  }
  return s / static_cast<double>(ea.size());
}

inline std::string describe(const char* label, double value) {
  std::ostringstream os;
  os.precision(17);
  os << label << '=' << value;
  return os.str();
}

inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

// Symmetry (bit-exact), non-negativity, identity and the triangle inequality
// over random triples sharing one frequency draw each.
inline std::vector<PropertyCheck> check_metric_axioms(const MetricSuiteConfig& cfg, double& max_distance) {
  Rng rng(cfg.seed);
  PropertyCheck sym{"symmetry", true, 0.0, 0.0, {}};
  PropertyCheck nonneg{"non_negativity", true, 0.0, 0.0, {}};
  PropertyCheck ident{"identity", true, 0.0, std::sqrt(kSqrtEps), {}};
  PropertyCheck tri{"triangle_inequality", true, -std::numeric_limits<double>::infinity(), kTriangleTolerance, {}};
  nonneg.observed = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.triples; ++i) {
    Tensor a = detail::random_set(cfg.set_size, 2, rng);
    Tensor b = detail::random_set(cfg.set_size, 2, rng);
    Tensor c = detail::random_set(cfg.set_size, 2, rng);
    Tensor freqs = sample_fixed(cfg.num_freqs, 2, 1.0, rng);
    auto d = [&](const Tensor& x, const Tensor& y) {
      const double v = detail::suite_distance(x, y, freqs, cfg.alpha, cfg.fault_flip_sign);
      if (std::isfinite(v)) max_distance = std::max(max_distance, v);
      return v;
    };
    const double ab = d(a, b), ba = d(b, a), bc = d(b, c), ac = d(a, c), aa = d(a, a);
    const std::string where = "triple " + std::to_string(i);
    if (ab != ba && !(std::isnan(ab) && std::isnan(ba))) {
      sym.observed = std::max(sym.observed, std::abs(ab - ba));
      if (sym.passed) sym.counterexample = where + ": " + detail::describe("d(A,B)", ab) + " " + detail::describe("d(B,A)", ba);
      sym.passed = false;
    }
    for (double v : {ab, bc, ac}) {
      if (!(v >= 0.0)) {
        if (nonneg.passed) nonneg.counterexample = where + ": " + detail::describe("d", v);
        nonneg.passed = false;
      }
      if (v < nonneg.observed || std::isnan(v)) nonneg.observed = v;
    }
    if (!(aa <= ident.bound)) {
      if (ident.passed) ident.counterexample = where + ": " + detail::describe("d(A,A)", aa);
      ident.passed = false;
    }
    ident.observed = std::max(ident.observed, aa);
    const double violation = ac - ab - bc;
    if (violation > tri.observed || std::isnan(violation)) tri.observed = violation;
    if (!(violation <= kTriangleTolerance)) {
      if (tri.passed) {
        tri.counterexample = where + ": " + detail::describe("d(A,C)", ac) + " " + detail::describe("d(A,B)", ab) +
                             " " + detail::describe("d(B,C)", bc);
      }
      tri.passed = false;
    }
  }
  return {sym, nonneg, ident, tri};
}

// Largest distance reachable with unit phasors: point masses whose
// projections differ by an odd multiple of pi at every frequency.
inline PropertyCheck check_adversarial_point_masses(std::size_t num_freqs, double& max_distance) {
  PropertyCheck out{"point_mass_bound", true, 0.0, kDistanceBound, {}};
  Tensor a = Tensor::zeros({1, 1});
  Tensor b = Tensor::full({1, 1}, 1.0);
  std::vector<double> t(num_freqs);
  for (std::size_t j = 0; j < num_freqs; ++j) t[j] = (2.0 * static_cast<double>(j % 8) + 1.0) * std::numbers::pi;
  Tensor freqs = Tensor::from({num_freqs, 1}, t);
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    NoGradGuard no_grad;
    const double d = cf_distance(a, b, freqs, CfLossConfig{alpha, num_freqs, kSqrtEps}).item();
    out.observed = std::max(out.observed, d);
    max_distance = std::max(max_distance, d);
    if (!(d <= kDistanceBound + kBoundSlack) && out.passed) {
      out.passed = false;
      out.counterexample = detail::describe("alpha", alpha) + " " + detail::describe("d", d);
    }
  }
  return out;
}

struct CfCase {
  std::string name;
  EllipticalSpec spec;
};

inline std::vector<CfCase> analytic_cases() {
  const std::vector<double> mu{0.5, -0.3};
  const std::vector<double> sigma{1.0, 0.5};
  return {{"gaussian", {EllipticalFamily::gaussian, mu, sigma, 0.0}},
          {"laplace", {EllipticalFamily::laplace, mu, sigma, 0.0}},
          {"student_t5", {EllipticalFamily::student_t, mu, sigma, 5.0}},
          {"cauchy", {EllipticalFamily::cauchy, mu, sigma, 0.0}}};
}

inline Tensor analytic_test_freqs() {
  return Tensor::from({5, 2}, {0.3, 0.1, -0.5, 0.8, 1.0, 0.0, 0.2, -1.2, 0.7, 0.7});
}

// Complex modulus |ECF(t) - CF(t)| at each row of freqs.
inline std::vector<double> ecf_errors(const Tensor& samples, const EllipticalSpec& spec, const Tensor& freqs) {
  NoGradGuard no_grad;
  EcfEval e = ecf(samples, freqs);
  std::vector<double> out(e.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const auto cf = analytic_cf(spec, freqs.data().subspan(j * freqs.dim(1), freqs.dim(1)));
    out[j] = std::abs(std::complex<double>(e.re[j], e.im[j]) - cf);
  }
  return out;
}

// |ECF - CF| <= 2 * 3 / sqrt(n) at 5 frequencies for each family.
inline std::vector<PropertyCheck> check_analytic_cf(const MetricSuiteConfig& cfg) {
  Rng rng(cfg.seed + 101);
  const Tensor freqs = analytic_test_freqs();
  const double bound = 2.0 * 3.0 / std::sqrt(static_cast<double>(cfg.cf_samples));
  std::vector<PropertyCheck> out;
  for (const auto& c : analytic_cases()) {
    Tensor x = sample_elliptical(c.spec, cfg.cf_samples, rng);
    PropertyCheck check{"analytic_cf_" + c.name, true, 0.0, bound, {}};
    auto err = ecf_errors(x, c.spec, freqs);
    for (std::size_t j = 0; j < err.size(); ++j) {
      check.observed = std::max(check.observed, err[j]);
      if (!(err[j] <= bound) && check.passed) {
        check.passed = false;
        check.counterexample = "frequency row " + std::to_string(j) + ": " + detail::describe("error", err[j]);
      }
    }
    out.push_back(check);
  }
  return out;
}

// Log-log slope of the RMS ECF error against n in {1e2, 1e3, 1e4, 1e5}.
inline std::vector<PropertyCheck> check_convergence(const MetricSuiteConfig& cfg) {
  Rng rng(cfg.seed + 202);
  const Tensor freqs = analytic_test_freqs();
  const std::vector<std::size_t> sizes{100, 1000, 10000, 100000};
  std::vector<PropertyCheck> out;
  for (const auto& c : analytic_cases()) {
    std::vector<double> lx, ly;
    for (std::size_t n : sizes) {
      double ss = 0.0;
      std::size_t count = 0;
      for (std::size_t r = 0; r < cfg.convergence_reps; ++r) {
        for (double e : ecf_errors(sample_elliptical(c.spec, n, rng), c.spec, freqs)) {
          ss += e * e;
          ++count;
        }
      }
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(0.5 * std::log(ss / static_cast<double>(count)));
    }
    const double s = detail::slope(lx, ly);
    PropertyCheck check{"convergence_slope_" + c.name, std::abs(s + 0.5) <= 0.15, s, 0.15, {}};
    if (!check.passed) check.counterexample = detail::describe("slope", s);
    out.push_back(check);
  }
  return out;
}

// c(t) against an explicit-angle decomposition, and c_{1/2} = c / 2.
inline std::vector<PropertyCheck> check_decomposition(const MetricSuiteConfig& cfg) {
  Rng rng(cfg.seed + 303);
  PropertyCheck ident{"decomposition_identity", true, 0.0, kDecompositionTolerance, {}};
  PropertyCheck half{"alpha_half_is_half_c", true, 0.0, kDecompositionTolerance, {}};
  const std::size_t per_batch = 100;
  const std::size_t batches = (cfg.decomposition_pairs + per_batch - 1) / per_batch;
  NoGradGuard no_grad;
  for (std::size_t bi = 0; bi < batches; ++bi) {
    const std::size_t n_a = 1 + rng.below(64), n_b = 1 + rng.below(64);
    Tensor a = detail::random_set(n_a, 2, rng);
    Tensor b = detail::random_set(n_b, 2, rng);
    Tensor freqs = sample_fixed(per_batch, 2, 0.25 + 4.0 * rng.uniform(), rng);
    EcfEval ea = ecf(a, freqs), eb = ecf(b, freqs);
    Tensor c = c_of_t(ea, eb);
    Tensor c_half = c_alpha_of_t(ea, eb, 0.5);
    for (std::size_t j = 0; j < per_batch; ++j) {
      const double ma = std::hypot(ea.re[j], ea.im[j]), mb = std::hypot(eb.re[j], eb.im[j]);
      const double gap = std::atan2(ea.im[j], ea.re[j]) - std::atan2(eb.im[j], eb.re[j]);
      const double oracle = (ma - mb) * (ma - mb) + 2.0 * ma * mb * (1.0 - std::cos(gap));
      const double e1 = std::abs(c[j] - oracle);
      const double e2 = std::abs(c_half[j] - 0.5 * c[j]);
      ident.observed = std::max(ident.observed, e1);
      half.observed = std::max(half.observed, e2);
      if (!(e1 <= kDecompositionTolerance) && ident.passed) {
        ident.passed = false;
        ident.counterexample = "batch " + std::to_string(bi) + " freq " + std::to_string(j) + ": " +
                               detail::describe("c", c[j]) + " " + detail::describe("oracle", oracle);
      }
      if (!(e2 <= kDecompositionTolerance) && half.passed) {
        half.passed = false;
        half.counterexample = "batch " + std::to_string(bi) + " freq " + std::to_string(j) + ": " +
                              detail::describe("c_half", c_half[j]) + " " + detail::describe("c", c[j]);
      }
    }
  }
  return {ident, half};
}

struct PointMassGrid {
  std::vector<double> t;         // 100 points, t = 0 included
  std::vector<double> distance;  // sqrt(c_alpha(t) + eps) per grid point
  std::size_t argmax = 0;
  std::size_t zero_index = 0;
};

// A frequency distribution concentrated at one grid point reduces the CF
// distance to that point's term; mixtures over the grid average the terms.
inline PointMassGrid point_mass_grid(const Tensor& a, const Tensor& b, double alpha) {
  PointMassGrid g;
  for (int i = 0; i < 100; ++i) g.t.push_back(-5.0 + 0.1 * i);
  g.zero_index = 50;
  g.t[g.zero_index] = 0.0;
  Tensor freqs = Tensor::from({100, 1}, g.t);
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < 100; ++i) {
    Tensor f = Tensor::from({1, 1}, {g.t[i]});
    g.distance.push_back(cf_distance(a, b, f, CfLossConfig{alpha, 1, kSqrtEps}).item());
  }
  g.argmax = static_cast<std::size_t>(std::max_element(g.distance.begin(), g.distance.end()) - g.distance.begin());
  return g;
}

inline std::vector<PropertyCheck> check_point_mass_extrema(const MetricSuiteConfig& cfg, double& max_distance) {
  Rng rng(cfg.seed + 404);
  Tensor a = sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::gaussian, {0.0}, 1.0), 4000, rng);
  Tensor b = sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::laplace, {0.5}, 1.0), 4000, rng);
  const auto g = point_mass_grid(a, b, cfg.alpha);
  for (double d : g.distance) max_distance = std::max(max_distance, d);
  const double best = g.distance[g.argmax];

  PropertyCheck dominate{"point_mass_argmax_dominates", true, best, best, {}};
  for (std::size_t i = 0; i < g.distance.size(); ++i) {
    if (g.distance[i] > best) {
      dominate.passed = false;
      dominate.counterexample = detail::describe("t", g.t[i]) + " " + detail::describe("d", g.distance[i]);
    }
  }
  // Random frequency distributions over the grid never beat the point mass.
  double worst_mix = 0.0;
  for (int r = 0; r < 500; ++r) {
    std::vector<double> w(g.t.size());
    double total = 0.0;
    for (auto& v : w) total += (v = rng.exponential());
    double mix = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mix += w[i] / total * g.distance[i];
    worst_mix = std::max(worst_mix, mix);
  }
  if (worst_mix > best) {
    dominate.passed = false;
    dominate.counterexample = detail::describe("mixture", worst_mix) + " " + detail::describe("point_mass", best);
  }
  PropertyCheck zero{"point_mass_at_zero", g.distance[g.zero_index] <= std::sqrt(kSqrtEps),
                     g.distance[g.zero_index], std::sqrt(kSqrtEps), {}};
  if (!zero.passed) zero.counterexample = detail::describe("d(t=0)", zero.observed);
  return {dominate, zero};
}

// Point masses delta apart under frequencies concentrated near 0. At alpha 1/2
// each term is sqrt(2)|sin(t^T d / 2)| >= sqrt(2)/pi |t^T d| while |t^T d| <= pi,
// and the distance grows with delta.
inline PropertyCheck check_small_ball(const MetricSuiteConfig& cfg) {
  Rng rng(cfg.seed + 505);
  PropertyCheck out{"small_ball_lower_bound", true, std::numeric_limits<double>::infinity(), 0.0, {}};
  Tensor freqs = sample_fixed(cfg.num_freqs, 2, 0.01, rng);
  const double angle = 2.0 * std::numbers::pi * rng.uniform();
  double prev = 0.0;
  NoGradGuard no_grad;
  for (double delta : {1e-3, 1e-2, 1e-1, 1.0}) {
    const double dx = delta * std::cos(angle), dy = delta * std::sin(angle);
    Tensor a = Tensor::zeros({1, 2});
    Tensor b = Tensor::from({1, 2}, {dx, dy});
    const double d = cf_distance(a, b, freqs, CfLossConfig{0.5, cfg.num_freqs, kSqrtEps}).item();
    double proj = 0.0;
    for (std::size_t j = 0; j < freqs.dim(0); ++j) proj += std::abs(freqs.at(j, 0) * dx + freqs.at(j, 1) * dy);
    const double lower = std::numbers::sqrt2 / std::numbers::pi * proj / static_cast<double>(freqs.dim(0));
    out.observed = std::min(out.observed, d / lower);
    if ((!(d >= lower) || !(d > prev)) && out.passed) {
      out.passed = false;
      out.counterexample = detail::describe("delta", delta) + " " + detail::describe("d", d) + " " +
                           detail::describe("lower", lower) + " " + detail::describe("previous", prev);
    }
    prev = d;
  }
  out.bound = 1.0;  // observed is the smallest ratio d / lower
  return out;
}

// ---------------------------------------------------------------------------
// Reciprocal equivalence on an exactly invertible affine pair

namespace detail {

// Gauss-Jordan inverse with partial pivoting, row-major n x n.
inline std::vector<double> invert(std::vector<double> a, std::size_t n) {
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-12) throw std::invalid_argument("invert: singular matrix");
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a[col * n + k], a[piv * n + k]);
      std::swap(inv[col * n + k], inv[piv * n + k]);
    }
    const double p = a[col * n + col];
    for (std::size_t k = 0; k < n; ++k) {
      a[col * n + k] /= p;
      inv[col * n + k] /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * n + col];
      for (std::size_t k = 0; k < n; ++k) {
        a[r * n + k] -= f * a[col * n + k];
        inv[r * n + k] -= f * inv[col * n + k];
      }
    }
  }
  return inv;
}

inline Tensor uniform_box(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<double> v(n * m);
  for (auto& x : v) x = 2.0 * rng.uniform_open() - 1.0;
  return Tensor::from({n, m}, std::move(v));
}

}  // namespace detail

struct AffinePair {
  Mlp g;
  Mlp f;
};

// g(z) = z W + b and f(y) = (y - b) W^{-1}, as single identity-activation layers.
inline AffinePair make_affine_pair(std::size_t m, Rng& rng) {
  std::vector<double> w(m * m), bias(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) w[i * m + j] = (i == j ? 1.5 : 0.0) + 0.4 * (2.0 * rng.uniform() - 1.0);
  for (auto& v : bias) v = 0.5 * (2.0 * rng.uniform() - 1.0);
  const auto winv = detail::invert(w, m);
  std::vector<double> fb(m, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < m; ++i) fb[j] -= bias[i] * winv[i * m + j];
  AffinePair p{Mlp(MlpSpec{{m, m}, Activation::identity, Activation::identity, 0, NetRole::generic}),
               Mlp(MlpSpec{{m, m}, Activation::identity, Activation::identity, 0, NetRole::generic})};
  std::copy(w.begin(), w.end(), p.g.weight(0).mutable_data().begin());
  std::copy(bias.begin(), bias.end(), p.g.bias(0).mutable_data().begin());
  std::copy(winv.begin(), winv.end(), p.f.weight(0).mutable_data().begin());
  std::copy(fb.begin(), fb.end(), p.f.bias(0).mutable_data().begin());
  return p;
}

inline double mean_sq_error(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.dim(0));
}

inline std::vector<PropertyCheck> check_reciprocal_equivalence(std::uint64_t seed, std::size_t m = 3,
                                                               std::size_t n = 4096) {
  Rng rng(seed + 606);
  const AffinePair p = make_affine_pair(m, rng);
  NoGradGuard no_grad;
  Tensor z = detail::uniform_box(n, m, rng);
  const double forward_err = mean_sq_error(z, p.f(p.g(z)));
  Tensor y = p.g(detail::uniform_box(n, m, rng));
  const double backward_err = mean_sq_error(y, p.g(p.f(y)));
  Tensor anchor = detail::uniform_box(n, m, rng);
  Tensor freqs = sample_fixed(64, m, 1.0, rng);
  const double embed = cf_distance(p.f(y), anchor, freqs, CfLossConfig{0.5, 64, kSqrtEps}).item();
  const double floor = 3.0 / std::sqrt(static_cast<double>(n));

  PropertyCheck fz{"reciprocal_z_to_z", forward_err <= 1e-12, forward_err, 1e-12, {}};
  PropertyCheck fy{"reciprocal_y_to_y", backward_err <= 1e-12, backward_err, 1e-12, {}};
  PropertyCheck em{"embedding_matches_anchor", embed <= floor, embed, floor, {}};
  if (!fz.passed) fz.counterexample = detail::describe("E|z - f(g(z))|^2", forward_err);
  if (!fy.passed) fy.counterexample = detail::describe("E|y - g(f(y))|^2", backward_err);
  if (!em.passed) em.counterexample = detail::describe("C_T(f(Y), Z)", embed);
  return {fz, fy, em};
}

// ---------------------------------------------------------------------------

inline MetricSuiteReport run_metric_suite(const MetricSuiteConfig& cfg) {
  MetricSuiteReport report;
  auto append = [&](std::vector<PropertyCheck> v) {
    report.checks.insert(report.checks.end(), v.begin(), v.end());
  };
  append(check_metric_axioms(cfg, report.max_distance));
  report.checks.push_back(check_adversarial_point_masses(cfg.num_freqs, report.max_distance));
  append(check_analytic_cf(cfg));
  append(check_convergence(cfg));
  append(check_decomposition(cfg));
  append(check_point_mass_extrema(cfg, report.max_distance));
  report.checks.push_back(check_small_ball(cfg));
  append(check_reciprocal_equivalence(cfg.seed));
  PropertyCheck bounded{"max_distance_bounded", report.max_distance <= kDistanceBound + kBoundSlack,
                        report.max_distance, kDistanceBound, {}};
  if (!bounded.passed) bounded.counterexample = detail::describe("max_distance", report.max_distance);
  report.checks.push_back(bounded);
  return report;
}

}  // namespace rcfgan
