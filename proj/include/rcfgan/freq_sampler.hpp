#pragma once

// Frequency distributions for the CF loss: fixed zero-mean Gaussian draws, or a
// scale mixture of normals whose per-dimension scales come from the t-net.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcfgan/networks.hpp"
#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

// Floor added to softplus so every mixture scale is strictly positive.
inline constexpr double kScaleFloor = 1e-4;

class LatentSpec {
 public:
  LatentSpec(std::size_t dim, double variance) : dim_(dim), variance_(variance) {
    if (dim == 0) throw std::invalid_argument("LatentSpec: dimension must be positive");
    if (!(variance > 0.0) || !std::isfinite(variance)) {
      throw std::invalid_argument("LatentSpec: variance must be positive, got " + std::to_string(variance));
    }
  }

  std::size_t dim() const { return dim_; }
  double variance() const { return variance_; }

 private:
  std::size_t dim_;
  double variance_;
};

// Rows i.i.d. N(0, variance I_m). Never participates in gradients.
inline Tensor sample_fixed(std::size_t k, std::size_t m, double variance, Rng& rng) {
  if (k == 0 || m == 0) throw std::invalid_argument("sample_fixed: k and m must be positive");
  if (!(variance > 0.0)) throw std::invalid_argument("sample_fixed: variance must be positive");
  const double sd = std::sqrt(variance);
  std::vector<double> data(k * m);
  for (auto& v : data) v = sd * rng.normal();
  return Tensor::from({k, m}, std::move(data));
}

inline Tensor sample_latent(std::size_t b, const LatentSpec& spec, Rng& rng) {
  if (b == 0) throw std::invalid_argument("sample_latent: batch size must be positive");
  return sample_fixed(b, spec.dim(), spec.variance(), rng);
}

// Per-dimension scales softplus(h(sigma)) + kScaleFloor.
inline Tensor mixture_scales(const Tensor& sigma_inputs, const Mlp& tnet) {
  return shift(softplus(tnet.forward(sigma_inputs)), kScaleFloor);
}

// t_i = base_i * s(h(sigma_i)), differentiable w.r.t. the t-net parameters.
inline Tensor sample_mixture(const Tensor& base, const Tensor& sigma_inputs, const Mlp& tnet) {
  if (base.rank() != 2 || base.shape() != sigma_inputs.shape()) {
    throw DimensionError("sample_mixture: base " + shape_str(base.shape()) + " and sigma inputs " +
                         shape_str(sigma_inputs.shape()) + " must be paired [k x m] draws");
  }
  return mul(base, mixture_scales(sigma_inputs, tnet));
}

enum class FreqMode { fixed_gaussian, scale_mixture };

class FreqSampler {
 public:
  static FreqSampler fixed(std::size_t dim, double base_variance = 1.0) {
    return FreqSampler(FreqMode::fixed_gaussian, dim, base_variance, nullptr);
  }

  // The sampler keeps a non-owning pointer; the t-net must outlive it.
  static FreqSampler mixture(const Mlp& tnet, double base_variance = 1.0) {
    return FreqSampler(FreqMode::scale_mixture, tnet.input_dim(), base_variance, &tnet);
  }

  FreqMode mode() const { return mode_; }
  std::size_t dim() const { return dim_; }
  double base_variance() const { return base_variance_; }
  const Mlp* tnet() const { return tnet_; }

  // k frequency rows. In mixture mode the sigma draws are N(0, 1) and paired
  // one-to-one with the base draws.
  Tensor draw(std::size_t k, Rng& rng) const {
    Tensor base = sample_fixed(k, dim_, base_variance_, rng);
    if (mode_ == FreqMode::fixed_gaussian) return base;
    Tensor sigma = sample_fixed(k, dim_, 1.0, rng);
    return sample_mixture(base, sigma, *tnet_);
  }

 private:
  FreqSampler(FreqMode mode, std::size_t dim, double base_variance, const Mlp* tnet)
      : mode_(mode), dim_(dim), base_variance_(base_variance), tnet_(tnet) {
    if (dim == 0) throw std::invalid_argument("FreqSampler: dimension must be positive");
    if (!(base_variance > 0.0)) throw std::invalid_argument("FreqSampler: base variance must be positive");
    if (mode == FreqMode::scale_mixture) {
      if (tnet == nullptr) throw std::invalid_argument("FreqSampler: scale mixture requires a t-net");
      if (tnet->input_dim() != tnet->output_dim()) {
        throw std::invalid_argument("FreqSampler: t-net must map m -> m");
      }
    }
  }

  FreqMode mode_;
  std::size_t dim_;
  double base_variance_;
  const Mlp* tnet_;
};

}  // namespace rcfgan
