#pragma once

// Evaluation tools: mode coverage on 2-D mixtures, the ECF permutation
// two-sample test, the Gaussian phase/amplitude swap, and the critic-free
// alpha sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcfgan/adam.hpp"
#include "rcfgan/datasets.hpp"
#include "rcfgan/ecf.hpp"
#include "rcfgan/freq_sampler.hpp"
#include "rcfgan/networks.hpp"
#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

// ---------------------------------------------------------------------------
// Mode coverage

struct ModeReport {
  std::size_t modes_covered = 0;
  std::size_t total_modes = 0;
  double high_quality_fraction = 0.0;
  std::size_t threshold = 0;
  std::vector<std::size_t> per_mode_counts;
};

// Samples needed before a mode counts as covered: max(5, n / (10 K)), but never
// more than an even share n / K, so K samples placed one per mode still count.
inline std::size_t coverage_threshold(std::size_t n, std::size_t modes) {
  const std::size_t base = std::max<std::size_t>(5, (n + 10 * modes - 1) / (10 * modes));
  return std::max<std::size_t>(1, std::min(base, n / modes));
}

// Each sample goes to its nearest mode mean and is high quality when both
// coordinates lie within 3 component standard deviations of that mean.
inline ModeReport mode_coverage(const Tensor& generated, const MixtureSpec& spec) {
  if (generated.rank() != 2 || generated.dim(1) != 2 || spec.dim() != 2) {
    throw DimensionError("mode_coverage: expected 2-D samples and a 2-D mixture, got " + shape_str(generated.shape()));
  }
  const std::size_t n = generated.dim(0);
  const std::size_t k = spec.components.size();
  ModeReport report;
  report.total_modes = k;
  report.per_mode_counts.assign(k, 0);
  std::size_t good = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = generated.at(i, 0), y = generated.at(i, 1);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const auto& mu = spec.components[c].spec.mu;
      const double d = (x - mu[0]) * (x - mu[0]) + (y - mu[1]) * (y - mu[1]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    const auto& mu = spec.components[best].spec.mu;
    const double band = 3.0 * spec.component_std(best);
    if (std::abs(x - mu[0]) <= band && std::abs(y - mu[1]) <= band) {
      ++report.per_mode_counts[best];
      ++good;
    }
  }
  report.threshold = n > 0 ? coverage_threshold(n, k) : 0;
  for (auto c : report.per_mode_counts)
    if (n > 0 && c >= report.threshold) ++report.modes_covered;
  report.high_quality_fraction = n > 0 ? static_cast<double>(good) / static_cast<double>(n) : 0.0;
  return report;
}

// ---------------------------------------------------------------------------
// Permutation two-sample test

struct PermutationResult {
  double p_value = 1.0;
  double observed = 0.0;
  std::size_t num_perms = 0;
};

namespace detail {

// cos/sin of every pooled sample against every frequency, [N x k] each.
struct Projections {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> cos_v;
  std::vector<double> sin_v;
};

inline Projections project(const Tensor& a, const Tensor& b, const Tensor& freqs) {
  Projections p;
  p.n = a.dim(0) + b.dim(0);
  p.k = freqs.dim(0);
  const std::size_t m = freqs.dim(1);
  p.cos_v.resize(p.n * p.k);
  p.sin_v.resize(p.n * p.k);
  auto f = freqs.data();
  for (std::size_t i = 0; i < p.n; ++i) {
    const Tensor& src = i < a.dim(0) ? a : b;
    const std::size_t row = i < a.dim(0) ? i : i - a.dim(0);
    auto x = src.data().subspan(row * m, m);
    for (std::size_t j = 0; j < p.k; ++j) {
      double dot = 0.0;
      for (std::size_t d = 0; d < m; ++d) dot += f[j * m + d] * x[d];
      p.cos_v[i * p.k + j] = std::cos(dot);
      p.sin_v[i * p.k + j] = std::sin(dot);
    }
  }
  return p;
}

// Distance between the groups given by label[i] (true: first group).
inline double split_distance(const Projections& p, const std::vector<char>& first, std::size_t n_first,
                             const CfLossConfig& cfg) {
  std::vector<double> re_a(p.k, 0.0), im_a(p.k, 0.0), re_b(p.k, 0.0), im_b(p.k, 0.0);
  for (std::size_t i = 0; i < p.n; ++i) {
    double* re = first[i] ? re_a.data() : re_b.data();
    double* im = first[i] ? im_a.data() : im_b.data();
    const double* c = &p.cos_v[i * p.k];
    const double* s = &p.sin_v[i * p.k];
    for (std::size_t j = 0; j < p.k; ++j) {
      re[j] += c[j];
      im[j] += s[j];
    }
  }
  const double inv_a = 1.0 / static_cast<double>(n_first);
  const double inv_b = 1.0 / static_cast<double>(p.n - n_first);
  double total = 0.0;
  for (std::size_t j = 0; j < p.k; ++j) {
    const double c = c_alpha_value(re_a[j] * inv_a, im_a[j] * inv_a, re_b[j] * inv_b, im_b[j] * inv_b, cfg.alpha);
    total += std::sqrt(c + cfg.epsilon);
  }
  return total / static_cast<double>(p.k);
}

}  // namespace detail

// Value-only CF distance, same expression as cf_distance without a graph.
inline double cf_distance_value(const Tensor& a, const Tensor& b, const Tensor& freqs, const CfLossConfig& cfg) {
  if (a.rank() != 2 || b.rank() != 2 || freqs.rank() != 2 || a.dim(1) != freqs.dim(1) || b.dim(1) != freqs.dim(1)) {
    throw DimensionError("cf_distance_value: incompatible shapes");
  }
  if (a.dim(0) == 0 || b.dim(0) == 0) throw DimensionError("cf_distance_value: empty sample set");
  auto p = detail::project(a, b, freqs);
  std::vector<char> first(p.n, 0);
  std::fill(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(a.dim(0)), 1);
  return detail::split_distance(p, first, a.dim(0), cfg);
}

// p = (1 + #{permuted >= observed}) / (1 + num_perms) under pooled relabeling.
inline PermutationResult permutation_test(const Tensor& a, const Tensor& b, const Tensor& freqs,
                                          const CfLossConfig& config, std::size_t num_perms, Rng& rng) {
  config.validate();
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1) || freqs.rank() != 2 || freqs.dim(1) != a.dim(1)) {
    throw DimensionError("permutation_test: samples and frequencies must share the feature dimension");
  }
  if (a.dim(0) < 2 || b.dim(0) < 2) throw std::invalid_argument("permutation_test: need at least 2 samples per group");
  if (num_perms < 100) throw std::invalid_argument("permutation_test: num_perms must be at least 100");

  const auto proj = detail::project(a, b, freqs);
  const std::size_t n_a = a.dim(0);
  std::vector<char> labels(proj.n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_a), 1);
  PermutationResult result;
  result.num_perms = num_perms;
  result.observed = detail::split_distance(proj, labels, n_a, config);
  // Ties count as exceeding; relative slack absorbs summation-order rounding.
  const double cut = result.observed * (1.0 - 1e-12);
  std::size_t exceed = 0;
  for (std::size_t r = 0; r < num_perms; ++r) {
    for (std::size_t i = proj.n - 1; i > 0; --i) std::swap(labels[i], labels[rng.below(i + 1)]);
    if (detail::split_distance(proj, labels, n_a, config) >= cut) ++exceed;
  }
  result.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + num_perms);
  return result;
}

struct TwoSampleTrial {
  double observed = 0.0;
  double p_value = 1.0;
  bool rejected = false;
};

struct TwoSampleStudy {
  std::vector<TwoSampleTrial> trials;
  double rejection_rate = 0.0;
};

// Repeated N(0,1) vs N(shift,1) tests in one dimension; shift = 0 gives the null.
inline TwoSampleStudy run_two_sample_study(std::size_t n, double shift, std::size_t trials, std::size_t num_perms,
                                           std::size_t num_freqs, double level, std::uint64_t seed) {
  Rng rng(seed);
  const CfLossConfig cfg{0.5, num_freqs, kSqrtEps};
  const auto gauss = [&](double mu) {
    return sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::gaussian, {mu}, 1.0), n, rng);
  };
  TwoSampleStudy study;
  std::size_t rejected = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Tensor a = gauss(0.0);
    Tensor b = gauss(shift);
    Tensor freqs = sample_fixed(num_freqs, 1, 1.0, rng);
    const auto r = permutation_test(a, b, freqs, cfg, num_perms, rng);
    study.trials.push_back({r.observed, r.p_value, r.p_value <= level});
    if (r.p_value <= level) ++rejected;
  }
  study.rejection_rate = trials > 0 ? static_cast<double>(rejected) / static_cast<double>(trials) : 0.0;
  return study;
}

// ---------------------------------------------------------------------------
// Phase / amplitude swap

inline constexpr double kVarianceFloor = 1e-6;

// Independent-pixel Gaussian fit.
struct GaussianFit {
  std::vector<double> mean;
  std::vector<double> variance;

  static GaussianFit of(const Tensor& samples) {
    if (samples.rank() != 2 || samples.dim(0) == 0) throw std::invalid_argument("GaussianFit: empty sample set");
    const std::size_t n = samples.dim(0), d = samples.dim(1);
    GaussianFit fit{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    auto x = samples.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) fit.mean[j] += x[i * d + j];
    for (auto& v : fit.mean) v /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double e = x[i * d + j] - fit.mean[j];
        fit.variance[j] += e * e;
      }
    for (auto& v : fit.variance) v = std::max(v / static_cast<double>(n), kVarianceFloor);
    return fit;
  }
};

inline Tensor sample_diagonal_gaussian(const std::vector<double>& mean, const std::vector<double>& variance,
                                       std::size_t n, Rng& rng) {
  const std::size_t d = mean.size();
  std::vector<double> data(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) data[i * d + j] = mean[j] + std::sqrt(variance[j]) * rng.normal();
  return Tensor::from({n, d}, std::move(data));
}

// For a Gaussian the CF phase is t^T mu and the amplitude exp(-t^T Sigma t / 2),
// so swapping phase and amplitude swaps means and variances.
struct SwapResult {
  GaussianFit fit_a;
  GaussianFit fit_b;
  Tensor a;             // (mu_A, Sigma_A)
  Tensor b;             // (mu_B, Sigma_B)
  Tensor phase_a_amp_b; // (mu_A, Sigma_B)
  Tensor phase_b_amp_a; // (mu_B, Sigma_A)
};

inline SwapResult swap_experiment(const Tensor& set_a, const Tensor& set_b, std::size_t n_out, Rng& rng) {
  if (set_a.rank() != 2 || set_b.rank() != 2 || set_a.dim(0) == 0 || set_b.dim(0) == 0) {
    throw std::invalid_argument("swap_experiment: both image sets must be non-empty");
  }
  if (set_a.dim(1) != set_b.dim(1)) throw DimensionError("swap_experiment: pixel counts differ");
  SwapResult r{GaussianFit::of(set_a), GaussianFit::of(set_b), {}, {}, {}, {}};
  r.a = sample_diagonal_gaussian(r.fit_a.mean, r.fit_a.variance, n_out, rng);
  r.b = sample_diagonal_gaussian(r.fit_b.mean, r.fit_b.variance, n_out, rng);
  r.phase_a_amp_b = sample_diagonal_gaussian(r.fit_a.mean, r.fit_b.variance, n_out, rng);
  r.phase_b_amp_a = sample_diagonal_gaussian(r.fit_b.mean, r.fit_a.variance, n_out, rng);
  return r;
}

// Index of the nearest class mean (squared Euclidean) for each row.
inline std::vector<std::size_t> nearest_class_mean(const Tensor& samples, const std::vector<std::vector<double>>& means) {
  const std::size_t d = samples.dim(1);
  std::vector<std::size_t> out(samples.dim(0));
  for (std::size_t i = 0; i < samples.dim(0); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < means.size(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double e = samples.data()[i * d + j] - means[c][j];
        s += e * e;
      }
      if (s < best) {
        best = s;
        out[i] = c;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alpha sweep: a generator trained directly against data with c_alpha, no critic.

struct AlphaSweepConfig {
  std::size_t steps = 3000;
  double lr = 1e-3;
  std::size_t batch = 64;
  std::size_t num_freqs = 64;
  double freq_variance = 0.1;
  std::size_t latent_dim = 4;
  double z_variance = 0.3;
  std::size_t hidden = 32;
  std::size_t eval_samples = 4000;
  std::uint64_t seed = 0;
};

struct AlphaSweepResult {
  double alpha = 0.0;
  double spread = 0.0;      // RMS distance of generated samples to the data mean
  double final_loss = 0.0;  // mean loss over the last 10% of steps
  double max_loss = 0.0;
  bool diverged = false;
};

inline std::vector<double> mixture_mean(const MixtureSpec& spec) {
  std::vector<double> mu(spec.dim(), 0.0);
  for (const auto& c : spec.components)
    for (std::size_t j = 0; j < mu.size(); ++j) mu[j] += c.weight * c.spec.mu[j];
  return mu;
}

inline double spread_about(const Tensor& samples, const std::vector<double>& center) {
  const std::size_t n = samples.dim(0), d = samples.dim(1);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double e = samples.data()[i * d + j] - center[j];
      s += e * e;
    }
  return std::sqrt(s / static_cast<double>(n));
}

inline AlphaSweepResult train_alpha(const MixtureSpec& data, double alpha, const AlphaSweepConfig& cfg) {
  AlphaSweepResult result;
  result.alpha = alpha;
  Rng rng(cfg.seed);
  const std::size_t dim = data.dim();
  Mlp gen(MlpSpec{{cfg.latent_dim, cfg.hidden, cfg.hidden, dim}, Activation::relu, Activation::identity,
                  cfg.seed + 17, NetRole::generator});
  auto params = gen.parameters();
  AdamState opt = AdamState::for_params(params);
  const AdamConfig adam{cfg.lr, 0.5, 0.999, 1e-8};
  const CfLossConfig loss_cfg{alpha, cfg.num_freqs, kSqrtEps};
  const LatentSpec latent(cfg.latent_dim, cfg.z_variance);
  const std::size_t tail = std::max<std::size_t>(1, cfg.steps / 10);
  double tail_sum = 0.0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Tensor real = sample_mixture(data, cfg.batch, rng);
    Tensor z = sample_latent(cfg.batch, latent, rng);
    Tensor freqs = sample_fixed(cfg.num_freqs, dim, cfg.freq_variance, rng);
    gen.zero_grad();
    Tensor loss = cf_distance(gen.forward(z), real, freqs, loss_cfg);
    const double v = loss.item();
    if (!std::isfinite(v)) {
      result.diverged = true;
      break;
    }
    result.max_loss = std::max(result.max_loss, v);
    if (step + tail >= cfg.steps) tail_sum += v;
    backward(loss);
    adam_step(params, opt, adam);
  }
  result.final_loss = tail_sum / static_cast<double>(tail);
  Rng eval_rng(cfg.seed + 1);
  Tensor z = sample_latent(cfg.eval_samples, latent, eval_rng);
  NoGradGuard no_grad;
  Tensor out = gen.forward(z);
  result.spread = spread_about(out, mixture_mean(data));
  if (!std::isfinite(result.spread)) result.diverged = true;
  return result;
}

// Each alpha trains independently from the same seed; a divergent alpha is flagged and the sweep continues.
inline std::vector<AlphaSweepResult> alpha_sweep(const MixtureSpec& data, const std::vector<double>& alphas,
                                                 const AlphaSweepConfig& cfg) {
  data.validate();
  std::vector<AlphaSweepResult> out;
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("alpha_sweep: alpha outside [0, 1]");
    out.push_back(train_alpha(data, a, cfg));
  }
  return out;
}

}  // namespace rcfgan
