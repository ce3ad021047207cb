#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "rcfgan/datasets.hpp"
#include "rcfgan/ecf.hpp"
#include "rcfgan/freq_sampler.hpp"
#include "rcfgan/grad_check.hpp"
#include "rcfgan/metric_suite.hpp"

using namespace rcfgan;

namespace {

constexpr double kPi = std::numbers::pi;

Tensor gaussian_1d(double mu, double var, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_elliptical(EllipticalSpec::isotropic(EllipticalFamily::gaussian, {mu}, var), n, rng);
}

Tensor column(std::initializer_list<double> v) { return Tensor::from({v.size(), 1}, std::vector<double>(v)); }

}  // namespace

TEST(Ecf, ZeroFrequencyGivesOneZero) {
  Rng rng(1);
  Tensor x = sample_fixed(50, 3, 4.0, rng);
  EcfEval e = ecf(x, Tensor::zeros({1, 3}));
  EXPECT_EQ(e.re[0], 1.0);
  EXPECT_EQ(e.im[0], 0.0);
}

TEST(Ecf, SingleSampleIsUnitPhasor) {
  Tensor x = Tensor::from({1, 2}, {0.3, -0.7});
  Tensor t = Tensor::from({1, 2}, {1.5, 0.5});
  EcfEval e = ecf(x, t);
  const double dot = 0.3 * 1.5 - 0.7 * 0.5;
  EXPECT_DOUBLE_EQ(e.re[0], std::cos(dot));
  EXPECT_DOUBLE_EQ(e.im[0], std::sin(dot));
}

TEST(Ecf, StandardGaussianAtOne) {
  EcfEval e = ecf(gaussian_1d(0.0, 1.0, 100000, 7), column({1.0}));
  EXPECT_NEAR(e.re[0], std::exp(-0.5), 0.02);
  EXPECT_NEAR(e.im[0], 0.0, 0.02);
}

TEST(Ecf, ModulusNeverExceedsOne) {
  Rng rng(2);
  Tensor x = sample_fixed(200, 2, 9.0, rng);
  EcfEval e = ecf(x, sample_fixed(500, 2, 25.0, rng));
  for (std::size_t j = 0; j < e.size(); ++j) EXPECT_LE(std::hypot(e.re[j], e.im[j]), 1.0 + 1e-9);
}

TEST(Ecf, DimensionMismatchThrows) {
  EXPECT_THROW(ecf(Tensor::zeros({4, 2}), Tensor::zeros({3, 3})), DimensionError);
  EXPECT_THROW(ecf(Tensor::zeros({0, 2}), Tensor::zeros({3, 2})), DimensionError);
}

TEST(COfT, IdenticalEcfsGiveZero) {
  Rng rng(3);
  Tensor x = sample_fixed(64, 2, 1.0, rng);
  Tensor t = sample_fixed(16, 2, 1.0, rng);
  Tensor c = c_of_t(ecf(x, t), ecf(x, t));
  for (double v : c.data()) EXPECT_EQ(v, 0.0);
}

TEST(COfT, ShiftedGaussiansMatchClosedForm) {
  Tensor t = column({0.5, 1.0, 2.0});
  Tensor c = c_of_t(ecf(gaussian_1d(0.0, 1.0, 100000, 11), t), ecf(gaussian_1d(1.0, 1.0, 100000, 12), t));
  for (std::size_t j = 0; j < 3; ++j) {
    const double tj = t[j];
    const double expected = 2.0 * std::exp(-tj * tj) * (1.0 - std::cos(tj));
    EXPECT_NEAR(c[j], expected, 0.05) << "t = " << tj;
  }
}

TEST(COfT, OppositePointMassesGiveFour) {
  Tensor t = column({1.0});
  Tensor c = c_of_t(ecf(column({0.0}), t), ecf(column({kPi}), t));
  EXPECT_NEAR(c[0], 4.0, 1e-15);
}

TEST(COfT, FrequencyMismatchThrows) {
  Tensor x = column({0.0, 1.0});
  EXPECT_THROW(c_of_t(ecf(x, column({1.0})), ecf(x, column({2.0}))), DimensionError);
}

TEST(COfT, ValuesWithinZeroToFour) {
  Rng rng(4);
  for (int r = 0; r < 20; ++r) {
    Tensor t = sample_fixed(32, 2, 4.0, rng);
    Tensor c = c_of_t(ecf(sample_fixed(8, 2, 1.0, rng), t), ecf(sample_fixed(8, 2, 1.0, rng), t));
    for (double v : c.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 4.0 + 1e-12);
    }
  }
}

TEST(CAlpha, HalfIsHalfOfC) {
  Rng rng(5);
  Tensor t = sample_fixed(200, 2, 2.0, rng);
  EcfEval a = ecf(sample_fixed(30, 2, 1.0, rng), t);
  EcfEval b = ecf(sample_fixed(40, 2, 0.5, rng), t);
  Tensor c = c_of_t(a, b);
  Tensor h = c_alpha_of_t(a, b, 0.5);
  for (std::size_t j = 0; j < c.numel(); ++j) EXPECT_NEAR(h[j], 0.5 * c[j], 1e-12);
}

TEST(CAlpha, IdenticalEcfsGiveZeroForAnyAlpha) {
  Rng rng(6);
  Tensor x = sample_fixed(20, 1, 1.0, rng);
  Tensor t = sample_fixed(10, 1, 1.0, rng);
  for (double alpha : {0.0, 0.3, 1.0}) {
    Tensor c = c_alpha_of_t(ecf(x, t), ecf(x, t), alpha);
    for (double v : c.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(CAlpha, PhaseOnlyOppositePhasors) {
  // Both ECFs have modulus r = |cos(0.4)| at t = 1, with a phase gap of pi.
  const double d = 0.4;
  Tensor t = column({1.0});
  EcfEval a = ecf(column({-d, d}), t);
  EcfEval b = ecf(column({kPi - d, kPi + d}), t);
  const double r = std::cos(d);
  EXPECT_NEAR(c_alpha_of_t(a, b, 0.0)[0], 4.0 * r * r, 1e-12);
  EXPECT_NEAR(c_alpha_of_t(a, b, 1.0)[0], 0.0, 1e-12);
}

TEST(CAlpha, RejectsAlphaOutOfRange) {
  Tensor x = column({0.0});
  Tensor t = column({1.0});
  EXPECT_THROW(c_alpha_of_t(ecf(x, t), ecf(x, t), 1.5), std::invalid_argument);
  EXPECT_THROW(c_alpha_of_t(ecf(x, t), ecf(x, t), -0.1), std::invalid_argument);
}

TEST(CAlpha, DecompositionAgainstExplicitAngles) {
  Rng rng(8);
  Tensor t = sample_fixed(300, 2, 1.0, rng);
  EcfEval a = ecf(sample_fixed(25, 2, 1.0, rng), t);
  EcfEval b = ecf(shift(sample_fixed(25, 2, 1.0, rng), 0.7).detach(), t);
  CfTerms terms = cf_terms(a, b);
  auto [amp_a, ph_a] = amplitude_phase(a);
  auto [amp_b, ph_b] = amplitude_phase(b);
  Tensor c = c_of_t(a, b);
  for (std::size_t j = 0; j < c.numel(); ++j) {
    const double amplitude = (amp_a[j] - amp_b[j]) * (amp_a[j] - amp_b[j]);
    const double phase = 2.0 * amp_a[j] * amp_b[j] * (1.0 - std::cos(ph_a[j] - ph_b[j]));
    EXPECT_NEAR(terms.amplitude[j], amplitude, 1e-12);
    EXPECT_NEAR(terms.phase[j], phase, 1e-12);
    EXPECT_NEAR(c[j], amplitude + phase, 1e-12);
  }
}

TEST(CfDistance, IdenticalSetsAtMostSqrtEps) {
  Rng rng(9);
  Tensor x = sample_fixed(100, 2, 1.0, rng);
  Tensor t = sample_fixed(64, 2, 1.0, rng);
  EXPECT_LE(cf_distance(x, x, t, CfLossConfig{}).item(), 1e-6 + 1e-18);
}

TEST(CfDistance, OppositePointMassesHalfAlpha) {
  Tensor d = cf_distance(column({0.0}), column({kPi}), column({1.0}), CfLossConfig{0.5, 1, kSqrtEps});
  EXPECT_NEAR(d.item(), std::sqrt(2.0), 1e-12);
}

TEST(CfDistance, BoundedByTwo) {
  Rng rng(10);
  for (int r = 0; r < 50; ++r) {
    Tensor t = sample_fixed(32, 1, 100.0, rng);
    const double alpha = rng.uniform();
    const double d =
        cf_distance(sample_fixed(4, 1, 1.0, rng), sample_fixed(4, 1, 50.0, rng), t, CfLossConfig{alpha, 32, kSqrtEps})
            .item();
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 2.0 + 1e-12);
  }
  const double worst = cf_distance(column({0.0}), column({kPi}), column({1.0}), CfLossConfig{0.0, 1, kSqrtEps}).item();
  EXPECT_LE(worst, 2.0 + 1e-12);
}

TEST(CfDistance, SymmetricBitExact) {
  Rng rng(12);
  Tensor t = sample_fixed(64, 2, 1.0, rng);
  Tensor a = sample_fixed(30, 2, 1.0, rng), b = sample_fixed(50, 2, 2.0, rng);
  EXPECT_EQ(cf_distance(a, b, t, CfLossConfig{}).item(), cf_distance(b, a, t, CfLossConfig{}).item());
}

TEST(CfDistance, EmptySetThrows) {
  EXPECT_THROW(cf_distance(Tensor::zeros({0, 1}), column({1.0}), column({1.0}), CfLossConfig{}), DimensionError);
}

TEST(CfDistance, GradientMatchesFiniteDifferences) {
  Rng rng(13);
  std::vector<Tensor> in{detail::random_input({6, 2}, rng, -2, 2), detail::random_input({5, 2}, rng, -2, 2)};
  for (auto& t : in) t.set_requires_grad(true);
  Tensor freqs = sample_fixed(16, 2, 1.0, rng);
  for (double alpha : {0.1, 0.5, 0.9}) {
    const double err = gradient_relative_error(
        in, [&] { return cf_distance(in[0], in[1], freqs, CfLossConfig{alpha, 16, kSqrtEps}); });
    EXPECT_LE(err, 1e-4) << "alpha " << alpha;
  }
}

TEST(CfDistance, PointMassesSeparatedLowerBound) {
  Rng rng(14);
  Tensor t = sample_fixed(256, 1, 0.01, rng);
  double prev = 0.0;
  for (double delta : {0.05, 0.1, 0.2, 0.4}) {
    const double d = cf_distance(column({0.0}), column({delta}), t, CfLossConfig{}).item();
    EXPECT_GT(d, prev);
    prev = d;
  }
}

TEST(AmplitudePhase, UnitReal) {
  EcfEval e{Tensor::from({1}, {1.0}), Tensor::from({1}, {0.0}), Tensor::zeros({1, 1})};
  auto [amp, ph] = amplitude_phase(e);
  EXPECT_EQ(amp[0], 1.0);
  EXPECT_EQ(ph[0], 0.0);
}

TEST(AmplitudePhase, UnitImaginary) {
  EcfEval e{Tensor::from({1}, {0.0}), Tensor::from({1}, {1.0}), Tensor::zeros({1, 1})};
  auto [amp, ph] = amplitude_phase(e);
  EXPECT_EQ(amp[0], 1.0);
  EXPECT_DOUBLE_EQ(ph[0], kPi / 2);
}

TEST(AmplitudePhase, PrincipalRangeAndDegenerate) {
  EXPECT_DOUBLE_EQ(principal_phase(-1.0, 0.0), kPi);
  EXPECT_DOUBLE_EQ(principal_phase(-1.0, -0.0), kPi);
  EXPECT_EQ(principal_phase(1e-13, 1e-13), 0.0);
}

TEST(AmplitudePhase, ShiftedGaussian) {
  EcfEval e = ecf(gaussian_1d(2.0, 1.0, 100000, 15), column({0.5}));
  auto [amp, ph] = amplitude_phase(e);
  EXPECT_NEAR(amp[0], std::exp(-0.125), 0.02);
  EXPECT_NEAR(ph[0], 1.0, 0.02);
}

TEST(MetricSuite, AxiomsHoldOnSmallRun) {
  MetricSuiteConfig cfg;
  cfg.triples = 60;
  cfg.set_size = 128;
  double max_d = 0.0;
  for (const auto& c : check_metric_axioms(cfg, max_d)) EXPECT_TRUE(c.passed) << c.name << ' ' << c.counterexample;
  EXPECT_LE(max_d, 2.0 + kBoundSlack);
}

TEST(MetricSuite, DecompositionIdentity) {
  MetricSuiteConfig cfg;
  cfg.decomposition_pairs = 2000;
  for (const auto& c : check_decomposition(cfg)) {
    EXPECT_TRUE(c.passed) << c.name << ' ' << c.observed;
    EXPECT_LE(c.observed, 1e-12);
  }
}
