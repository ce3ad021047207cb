#pragma once

// Synthetic distributions with closed-form characteristic functions, mixture
// presets for mode-collapse experiments, and MNIST IDX ingestion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

enum class EllipticalFamily { gaussian, laplace, student_t, cauchy };

// x = mu + sqrt(sigma) * s, with s drawn from the standardized family.
// sigma is the diagonal of the scale matrix.
struct EllipticalSpec {
  EllipticalFamily family = EllipticalFamily::gaussian;
  std::vector<double> mu;
  std::vector<double> sigma;
  double nu = 0.0;  // degrees of freedom, student_t only

  std::size_t dim() const { return mu.size(); }

  void validate() const {
    if (mu.empty()) throw std::invalid_argument("EllipticalSpec: empty location vector");
    if (sigma.size() != mu.size()) throw std::invalid_argument("EllipticalSpec: mu and sigma lengths differ");
    for (double s : sigma)
      if (!(s > 0.0)) throw std::invalid_argument("EllipticalSpec: scale entries must be positive");
    if (family == EllipticalFamily::student_t && !(nu > 0.0)) {
      throw std::invalid_argument("EllipticalSpec: student_t requires nu > 0");
    }
  }

  static EllipticalSpec isotropic(EllipticalFamily family, std::vector<double> mu, double sigma, double nu = 0.0) {
    std::vector<double> s(mu.size(), sigma);
    return EllipticalSpec{family, std::move(mu), std::move(s), nu};
  }
};

// Density generator psi with CF = exp(j t^T mu) psi(t^T Sigma t).
inline double density_generator(const EllipticalSpec& spec, double s) {
  switch (spec.family) {
    case EllipticalFamily::gaussian: return std::exp(-0.5 * s);
    case EllipticalFamily::laplace: return 1.0 / (1.0 + s);
    case EllipticalFamily::cauchy: return std::exp(-std::sqrt(s));
    case EllipticalFamily::student_t: {
      if (s <= 0.0) return 1.0;
      const double nu = spec.nu;
      const double x = std::sqrt(nu * s);
      if (x > 700.0) return 0.0;
      const double k = std::cyl_bessel_k(0.5 * nu, x);
      if (!std::isfinite(k) || k <= 0.0) return std::exp(-0.5 * s);  // large nu: Gaussian limit
      return std::exp(std::log(k) + 0.5 * nu * std::log(x) - std::lgamma(0.5 * nu) -
                      (0.5 * nu - 1.0) * std::log(2.0));
    }
  }
  return 0.0;
}

inline std::complex<double> analytic_cf(const EllipticalSpec& spec, std::span<const double> t) {
  if (t.size() != spec.dim()) throw DimensionError("analytic_cf: frequency dimension mismatch");
  double phase = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    phase += t[i] * spec.mu[i];
    quad += t[i] * t[i] * spec.sigma[i];
  }
  return std::polar(density_generator(spec, quad), phase);
}

namespace detail {

// One standardized draw written into out (length m).
inline void standard_draw(const EllipticalSpec& spec, Rng& rng, std::span<double> out) {
  const std::size_t m = out.size();
  switch (spec.family) {
    case EllipticalFamily::gaussian:
      for (auto& v : out) v = rng.normal();
      return;
    case EllipticalFamily::laplace:
      if (m == 1) {
        out[0] = rng.exponential() - rng.exponential();
      } else {
        // Gaussian scale mixture with exponential mixing keeps the joint elliptical.
        const double w = std::sqrt(2.0 * rng.exponential());
        for (auto& v : out) v = w * rng.normal();
      }
      return;
    case EllipticalFamily::student_t:
    case EllipticalFamily::cauchy: {
      const double nu = spec.family == EllipticalFamily::cauchy ? 1.0 : spec.nu;
      const double w = 1.0 / std::sqrt(rng.chi_squared(nu) / nu);
      for (auto& v : out) v = w * rng.normal();
      return;
    }
  }
}

inline void elliptical_draw(const EllipticalSpec& spec, Rng& rng, std::span<double> out) {
  standard_draw(spec, rng, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spec.mu[i] + std::sqrt(spec.sigma[i]) * out[i];
}

}  // namespace detail

inline Tensor sample_elliptical(const EllipticalSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  if (n == 0) throw std::invalid_argument("sample_elliptical: n must be positive");
  const std::size_t m = spec.dim();
  std::vector<double> data(n * m);
  for (std::size_t i = 0; i < n; ++i) detail::elliptical_draw(spec, rng, std::span<double>(&data[i * m], m));
  return Tensor::from({n, m}, std::move(data));
}

// ---------------------------------------------------------------------------
// Mixtures

enum class MixturePreset { none, ring8, grid25, two_moons, bimodal1d };

struct MixtureComponent {
  double weight = 1.0;
  EllipticalSpec spec;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
  MixturePreset preset = MixturePreset::none;

  std::size_t dim() const { return components.empty() ? 0 : components.front().spec.dim(); }

  void validate() const {
    if (components.empty()) throw std::invalid_argument("MixtureSpec: no components");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0)) throw std::invalid_argument("MixtureSpec: weights must be positive");
      c.spec.validate();
      if (c.spec.dim() != dim()) throw std::invalid_argument("MixtureSpec: components differ in dimension");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("MixtureSpec: weights must sum to 1");
  }

  // Per-coordinate standard deviation of a Gaussian component.
  double component_std(std::size_t i) const { return std::sqrt(components.at(i).spec.sigma.at(0)); }
};

namespace detail {

inline MixtureSpec equal_gaussians(const std::vector<std::vector<double>>& means, double stddev, MixturePreset p) {
  MixtureSpec spec;
  spec.preset = p;
  const double w = 1.0 / static_cast<double>(means.size());
  for (const auto& mu : means) {
    spec.components.push_back({w, EllipticalSpec::isotropic(EllipticalFamily::gaussian, mu, stddev * stddev)});
  }
  // Exact unit total regardless of rounding in 1/K.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < spec.components.size(); ++i) rest -= spec.components[i].weight;
  spec.components.back().weight = rest;
  return spec;
}

}  // namespace detail

// 8 Gaussians on a circle of radius 2, std 0.02.
inline MixtureSpec ring8() {
  std::vector<std::vector<double>> means;
  for (int i = 0; i < 8; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 8.0;
    means.push_back({2.0 * std::cos(a), 2.0 * std::sin(a)});
  }
  return detail::equal_gaussians(means, 0.02, MixturePreset::ring8);
}

// 25 Gaussians on the grid {-2,-1,0,1,2}^2, std 0.05.
inline MixtureSpec grid25() {
  std::vector<std::vector<double>> means;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) means.push_back({static_cast<double>(i), static_cast<double>(j)});
  return detail::equal_gaussians(means, 0.05, MixturePreset::grid25);
}

// Two interleaved half circles, each traced by 12 Gaussians of std 0.05.
inline MixtureSpec two_moons() {
  std::vector<std::vector<double>> means;
  for (int i = 0; i < 12; ++i) {
    const double a = std::numbers::pi * i / 11.0;
    means.push_back({std::cos(a) - 0.5, std::sin(a) - 0.25});
    means.push_back({0.5 - std::cos(a), 0.25 - std::sin(a)});
  }
  return detail::equal_gaussians(means, 0.05, MixturePreset::two_moons);
}

// Two 1-D Gaussians at -1 and +1, std 0.1.
inline MixtureSpec bimodal1d() {
  return detail::equal_gaussians({{-1.0}, {1.0}}, 0.1, MixturePreset::bimodal1d);
}

inline MixtureSpec mixture_preset(const std::string& name) {
  if (name == "ring8") return ring8();
  if (name == "grid25") return grid25();
  if (name == "two_moons") return two_moons();
  if (name == "bimodal1d") return bimodal1d();
  throw std::invalid_argument("unknown mixture preset '" + name + "' (expected ring8, grid25, two_moons, bimodal1d)");
}

// Returns samples and, if requested, the component index of every row.
inline Tensor sample_mixture(const MixtureSpec& spec, std::size_t n, Rng& rng,
                             std::vector<std::size_t>* assignments = nullptr) {
  spec.validate();
  if (n == 0) throw std::invalid_argument("sample_mixture: n must be positive");
  const std::size_t m = spec.dim();
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : spec.components) cumulative.push_back(acc += c.weight);
  std::vector<double> data(n * m);
  if (assignments) assignments->assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t c = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    if (c >= spec.components.size()) c = spec.components.size() - 1;
    if (assignments) (*assignments)[i] = c;
    detail::elliptical_draw(spec.components[c].spec, rng, std::span<double>(&data[i * m], m));
  }
  return Tensor::from({n, m}, std::move(data));
}

inline std::complex<double> analytic_cf(const MixtureSpec& spec, std::span<const double> t) {
  std::complex<double> total = 0.0;
  for (const auto& c : spec.components) total += c.weight * analytic_cf(c.spec, t);
  return total;
}

// ---------------------------------------------------------------------------
// IDX (MNIST) files

enum class IdxErrorKind { io, bad_magic, truncated, count_mismatch };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxDataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> images;  // n x (rows*cols), scaled to [-1, 1]
  std::vector<std::uint8_t> labels;
  std::uint64_t checksum = 0;  // FNV-1a over both source files

  std::size_t size() const { return labels.size(); }
  std::size_t pixels() const { return rows * cols; }

  // All images with the given label as an [n x pixels] tensor.
  Tensor digit(std::uint8_t label) const {
    std::vector<double> data;
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (labels[i] != label) continue;
      data.insert(data.end(), images.begin() + static_cast<std::ptrdiff_t>(i * pixels()),
                  images.begin() + static_cast<std::ptrdiff_t>((i + 1) * pixels()));
      ++n;
    }
    return Tensor::from({n, pixels()}, std::move(data));
  }

  Tensor all_images() const { return Tensor::from({size(), pixels()}, images); }
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IdxError(IdxErrorKind::io, "cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be32(const std::string& bytes, std::size_t pos) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[pos + i]);
  return v;
}

inline void write_be32(std::string& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::string hex_bytes(const std::string& bytes, std::size_t n) {
  std::ostringstream os;
  for (std::size_t i = 0; i < n && i < bytes.size(); ++i) {
    os << (i ? " " : "") << "0x" << std::hex << std::setw(2) << std::setfill('0')
       << static_cast<int>(static_cast<unsigned char>(bytes[i]));
  }
  return os.str();
}

inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline IdxDataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const std::string img = detail::read_file(images_path);
  const std::string lab = detail::read_file(labels_path);
  if (img.size() < 16) throw IdxError(IdxErrorKind::truncated, images_path.string() + ": header truncated");
  if (detail::read_be32(img, 0) != kIdxImagesMagic) {
    throw IdxError(IdxErrorKind::bad_magic, images_path.string() + ": bad image magic " + detail::hex_bytes(img, 4));
  }
  if (lab.size() < 8) throw IdxError(IdxErrorKind::truncated, labels_path.string() + ": header truncated");
  if (detail::read_be32(lab, 0) != kIdxLabelsMagic) {
    throw IdxError(IdxErrorKind::bad_magic, labels_path.string() + ": bad label magic " + detail::hex_bytes(lab, 4));
  }
  IdxDataset ds;
  const std::size_t n_img = detail::read_be32(img, 4);
  ds.rows = detail::read_be32(img, 8);
  ds.cols = detail::read_be32(img, 12);
  const std::size_t n_lab = detail::read_be32(lab, 4);
  if (img.size() != 16 + n_img * ds.pixels()) {
    throw IdxError(IdxErrorKind::truncated, images_path.string() + ": expected " +
                                                std::to_string(16 + n_img * ds.pixels()) + " bytes, found " +
                                                std::to_string(img.size()));
  }
  if (lab.size() != 8 + n_lab) {
    throw IdxError(IdxErrorKind::truncated, labels_path.string() + ": expected " + std::to_string(8 + n_lab) +
                                                " bytes, found " + std::to_string(lab.size()));
  }
  if (n_img != n_lab) {
    throw IdxError(IdxErrorKind::count_mismatch,
                   std::to_string(n_img) + " images but " + std::to_string(n_lab) + " labels");
  }
  ds.images.resize(n_img * ds.pixels());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    ds.images[i] = static_cast<unsigned char>(img[16 + i]) / 127.5 - 1.0;
  }
  ds.labels.assign(lab.begin() + 8, lab.end());
  ds.checksum = detail::fnv1a(lab, detail::fnv1a(img));
  return ds;
}

inline void write_idx(const IdxDataset& ds, const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
  std::string img;
  detail::write_be32(img, kIdxImagesMagic);
  detail::write_be32(img, static_cast<std::uint32_t>(ds.size()));
  detail::write_be32(img, static_cast<std::uint32_t>(ds.rows));
  detail::write_be32(img, static_cast<std::uint32_t>(ds.cols));
  for (double v : ds.images) {
    const long p = std::lround((v + 1.0) * 127.5);
    img.push_back(static_cast<char>(std::clamp(p, 0L, 255L)));
  }
  std::string lab;
  detail::write_be32(lab, kIdxLabelsMagic);
  detail::write_be32(lab, static_cast<std::uint32_t>(ds.size()));
  lab.append(ds.labels.begin(), ds.labels.end());
  std::ofstream(images_path, std::ios::binary).write(img.data(), static_cast<std::streamsize>(img.size()));
  std::ofstream(labels_path, std::ios::binary).write(lab.data(), static_cast<std::streamsize>(lab.size()));
}

}  // namespace rcfgan
