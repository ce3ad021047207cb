#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "rcfgan/datasets.hpp"
#include "rcfgan/ecf.hpp"
#include "rcfgan/metric_suite.hpp"

using namespace rcfgan;
namespace fs = std::filesystem;

namespace {

const fs::path kMnistDir = fs::path(RCFGAN_SOURCE_DIR) / "data" / "mnist5k";

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void dump(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string be32(std::uint32_t v) {
  std::string s;
  for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  return s;
}

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("rcfgan_ds_" + std::to_string(::getpid()))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// 3 images of 2x2 pixels.
void write_tiny(const fs::path& images, const fs::path& labels) {
  std::string img = be32(0x803) + be32(3) + be32(2) + be32(2);
  for (unsigned char v : {0, 255, 128, 7, 1, 2, 3, 4, 255, 255, 0, 0}) img.push_back(static_cast<char>(v));
  dump(images, img);
  dump(labels, be32(0x801) + be32(3) + std::string("\x01\x02\x01", 3));
}

std::complex<double> ecf_at(const Tensor& x, double t) {
  EcfEval e = ecf(x, Tensor::from({1, 1}, {t}));
  return {e.re[0], e.im[0]};
}

}  // namespace

TEST(Elliptical, GaussianEcfAtOne) {
  Rng rng(1);
  Tensor x = sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::gaussian, {0.0}, 1.0), 100000, rng);
  EXPECT_NEAR(ecf_at(x, 1.0).real(), std::exp(-0.5), 0.02);
}

TEST(Elliptical, CauchyModulusAtOne) {
  Rng rng(2);
  Tensor x = sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::cauchy, {0.0}, 1.0), 100000, rng);
  EXPECT_NEAR(std::abs(ecf_at(x, 1.0)), std::exp(-1.0), 0.02);
}

TEST(Elliptical, ShiftMovesPhase) {
  const double mu0 = 0.8;
  for (auto family : {EllipticalFamily::gaussian, EllipticalFamily::laplace, EllipticalFamily::cauchy}) {
    Rng r1(3), r2(3);
    Tensor base = sample_elliptical(EllipticalSpec::isotropic(family, {0.0}, 1.0), 100000, r1);
    Tensor moved = sample_elliptical(EllipticalSpec::isotropic(family, {mu0}, 1.0), 100000, r2);
    const double gap = std::arg(ecf_at(moved, 1.0)) - std::arg(ecf_at(base, 1.0));
    EXPECT_NEAR(gap, mu0, 1e-9);
  }
}

TEST(Elliptical, StudentTTendsToGaussian) {
  EllipticalSpec t_spec{EllipticalFamily::student_t, {0.0}, {1.0}, 1e4};
  EllipticalSpec g_spec{EllipticalFamily::gaussian, {0.0}, {1.0}};
  for (double s : {0.1, 1.0, 4.0}) EXPECT_NEAR(density_generator(t_spec, s), density_generator(g_spec, s), 1e-3);
  EllipticalSpec cauchy_as_t{EllipticalFamily::student_t, {0.0}, {1.0}, 1.0};
  EllipticalSpec cauchy{EllipticalFamily::cauchy, {0.0}, {1.0}};
  for (double s : {0.25, 1.0, 9.0}) EXPECT_NEAR(density_generator(cauchy_as_t, s), density_generator(cauchy, s), 1e-12);
}

TEST(Elliptical, AllFamiliesMatchAnalyticCf) {
  MetricSuiteConfig cfg;
  for (const auto& c : check_analytic_cf(cfg)) EXPECT_TRUE(c.passed) << c.name << ' ' << c.observed << " > " << c.bound;
}

TEST(Elliptical, ConvergenceSlope) {
  MetricSuiteConfig cfg;
  cfg.convergence_reps = 10;
  for (const auto& c : check_convergence(cfg)) EXPECT_TRUE(c.passed) << c.name << " slope " << c.observed;
}

TEST(Elliptical, InvalidSpecsRejected) {
  Rng rng(0);
  EXPECT_THROW(sample_elliptical(EllipticalSpec{EllipticalFamily::gaussian, {0.0}, {0.0}}, 5, rng),
               std::invalid_argument);
  EXPECT_THROW(sample_elliptical(EllipticalSpec{EllipticalFamily::student_t, {0.0}, {1.0}, 0.0}, 5, rng),
               std::invalid_argument);
  EXPECT_THROW(sample_elliptical(EllipticalSpec{EllipticalFamily::gaussian, {0.0, 1.0}, {1.0}}, 5, rng),
               std::invalid_argument);
  EXPECT_THROW(sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::gaussian, {0.0}, 1.0), 0, rng),
               std::invalid_argument);
}

TEST(Mixture, Ring8Geometry) {
  const auto spec = ring8();
  ASSERT_EQ(spec.components.size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / 8.0;
    EXPECT_NEAR(spec.components[i].spec.mu[0], 2.0 * std::cos(a), 1e-15);
    EXPECT_NEAR(spec.components[i].spec.mu[1], 2.0 * std::sin(a), 1e-15);
    EXPECT_NEAR(spec.component_std(i), 0.02, 1e-15);
  }
}

TEST(Mixture, Ring8AssignmentFrequencies) {
  Rng rng(4);
  const std::size_t n = 80000;
  std::vector<std::size_t> assign;
  sample_mixture(ring8(), n, rng, &assign);
  std::vector<std::size_t> counts(8, 0);
  for (auto a : assign) ++counts[a];
  const double expect = n / 8.0, sd = std::sqrt(n * (1.0 / 8.0) * (7.0 / 8.0));
  for (auto c : counts) EXPECT_LE(std::abs(static_cast<double>(c) - expect), 3.0 * sd);
}

TEST(Mixture, Ring8HitsEveryMode) {
  Rng rng(5);
  std::vector<std::size_t> assign;
  sample_mixture(ring8(), 10000, rng, &assign);
  std::vector<std::size_t> counts(8, 0);
  for (auto a : assign) ++counts[a];
  for (auto c : counts) EXPECT_GE(c, 1u);
}

TEST(Mixture, SingleComponentEqualsElliptical) {
  const auto comp = EllipticalSpec::isotropic(EllipticalFamily::laplace, {0.5, -1.0}, 0.3);
  MixtureSpec spec{{{1.0, comp}}, MixturePreset::none};
  Rng a(6), b(6);
  Tensor x = sample_mixture(spec, 100, a);
  b.uniform();
  Tensor y = sample_elliptical(comp, 100, b);
  // The mixture draws one uniform per row for the component choice.
  Rng c(6);
  std::vector<double> manual;
  for (int i = 0; i < 100; ++i) {
    c.uniform();
    std::vector<double> row(2);
    detail::elliptical_draw(comp, c, row);
    manual.insert(manual.end(), row.begin(), row.end());
  }
  EXPECT_TRUE(std::equal(x.data().begin(), x.data().end(), manual.begin()));
  EXPECT_EQ(x.shape(), y.shape());
}

TEST(Mixture, Grid25PerModeCounts) {
  const auto spec = grid25();
  ASSERT_EQ(spec.components.size(), 25u);
  Rng rng(7);
  std::vector<std::size_t> assign;
  Tensor x = sample_mixture(spec, 25000, rng, &assign);
  std::vector<std::size_t> near(25, 0);
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    const auto& mu = spec.components[assign[i]].spec.mu;
    EXPECT_LE(std::abs(mu[0]), 2.0);
    EXPECT_LE(std::abs(mu[1]), 2.0);
    if (std::abs(x.at(i, 0) - mu[0]) < 0.25 && std::abs(x.at(i, 1) - mu[1]) < 0.25) ++near[assign[i]];
  }
  for (std::size_t k = 0; k < 25; ++k) {
    EXPECT_NEAR(spec.component_std(k), 0.05, 1e-15);
    EXPECT_GT(near[k], 850u);
  }
}

TEST(Mixture, PresetsByName) {
  for (const char* name : {"ring8", "grid25", "two_moons", "bimodal1d"}) EXPECT_NO_THROW(mixture_preset(name).validate());
  EXPECT_THROW(mixture_preset("ring9"), std::invalid_argument);
  EXPECT_EQ(bimodal1d().dim(), 1u);
}

TEST(Mixture, WeightsMustSumToOne) {
  const auto comp = EllipticalSpec::isotropic(EllipticalFamily::gaussian, {0.0}, 1.0);
  MixtureSpec bad{{{0.5, comp}, {0.4, comp}}, MixturePreset::none};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  MixtureSpec negative{{{1.5, comp}, {-0.5, comp}}, MixturePreset::none};
  EXPECT_THROW(negative.validate(), std::invalid_argument);
  double total = 0.0;
  for (const auto& c : two_moons().components) total += c.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Idx, ScalingEndpoints) {
  TempDir dir;
  write_tiny(dir.path() / "img", dir.path() / "lab");
  const auto ds = load_idx(dir.path() / "img", dir.path() / "lab");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.rows, 2u);
  EXPECT_EQ(ds.cols, 2u);
  EXPECT_EQ(ds.images[0], -1.0);
  EXPECT_EQ(ds.images[1], 1.0);
  for (double v : ds.images) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(ds.digit(1).dim(0), 2u);
  EXPECT_EQ(ds.digit(2).dim(0), 1u);
}

TEST(Idx, RoundTripReproducesBytes) {
  TempDir dir;
  write_tiny(dir.path() / "img", dir.path() / "lab");
  const auto ds = load_idx(dir.path() / "img", dir.path() / "lab");
  write_idx(ds, dir.path() / "img2", dir.path() / "lab2");
  EXPECT_EQ(slurp(dir.path() / "img"), slurp(dir.path() / "img2"));
  EXPECT_EQ(slurp(dir.path() / "lab"), slurp(dir.path() / "lab2"));
  EXPECT_EQ(load_idx(dir.path() / "img2", dir.path() / "lab2").checksum, ds.checksum);
}

TEST(Idx, BadMagicNamesBytes) {
  TempDir dir;
  write_tiny(dir.path() / "img", dir.path() / "lab");
  std::string img = slurp(dir.path() / "img");
  img[2] = '\x09';
  img[3] = '\x13';
  dump(dir.path() / "img", img);
  try {
    load_idx(dir.path() / "img", dir.path() / "lab");
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::bad_magic);
    EXPECT_NE(std::string(e.what()).find("0x00 0x00 0x09 0x13"), std::string::npos) << e.what();
  }
}

TEST(Idx, TruncatedPayload) {
  TempDir dir;
  write_tiny(dir.path() / "img", dir.path() / "lab");
  std::string img = slurp(dir.path() / "img");
  dump(dir.path() / "img", img.substr(0, img.size() - 1));
  try {
    load_idx(dir.path() / "img", dir.path() / "lab");
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::truncated);
  }
}

TEST(Idx, CountMismatch) {
  TempDir dir;
  write_tiny(dir.path() / "img", dir.path() / "lab");
  dump(dir.path() / "lab", be32(0x801) + be32(2) + std::string("\x01\x02", 2));
  try {
    load_idx(dir.path() / "img", dir.path() / "lab");
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::count_mismatch);
  }
}

TEST(Idx, MissingFile) {
  try {
    load_idx("/nonexistent/images", "/nonexistent/labels");
    FAIL() << "expected IdxError";
  } catch (const IdxError& e) {
    EXPECT_EQ(e.kind(), IdxErrorKind::io);
  }
}

TEST(Idx, BundledMnistSubset) {
  const auto img = kMnistDir / "images-idx3-ubyte";
  const auto lab = kMnistDir / "labels-idx1-ubyte";
  if (!fs::exists(img)) GTEST_SKIP() << "MNIST subset not present";
  const std::string header = slurp(img).substr(0, 16);
  const auto ds = load_idx(img, lab);
  EXPECT_EQ(ds.size(), detail::read_be32(header, 4));
  EXPECT_EQ(ds.rows, 28u);
  EXPECT_EQ(ds.cols, 28u);
  EXPECT_EQ(ds.images.size(), ds.size() * 784);
  for (std::uint8_t d = 0; d < 10; ++d) EXPECT_GT(ds.digit(d).dim(0), 0u);
}
