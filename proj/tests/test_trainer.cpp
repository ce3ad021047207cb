#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "rcfgan/datasets.hpp"
#include "rcfgan/trainer.hpp"

using namespace rcfgan;
namespace fs = std::filesystem;

namespace {

using Snapshot = std::vector<std::vector<double>>;

Snapshot snapshot(const Mlp& net) {
  Snapshot out;
  for (const auto& p : net.parameters()) out.emplace_back(p.data().begin(), p.data().end());
  return out;
}

DataSource ring_source() {
  auto spec = std::make_shared<MixtureSpec>(ring8());
  return DataSource{2, [spec](std::size_t n, Rng& rng) { return sample_mixture(*spec, n, rng); }};
}

TrainConfig small_config(std::size_t iterations, std::uint64_t seed = 3) {
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.hidden = 16;
  cfg.b_d = cfg.b_g = cfg.b_t = cfg.b_sigma = 32;
  return cfg;
}

fs::path temp_dir(const std::string& name) {
  return fs::temp_directory_path() / ("rcfgan_trainer_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.b_t = 16;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.use_tnet = false;
  EXPECT_NO_THROW(bad.validate());
  bad = ok;
  bad.lr = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.alpha = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.lambda = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.b_d = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.z_variance = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TrainConfig, Defaults) {
  TrainConfig cfg;
  EXPECT_EQ(cfg.latent_dim, 2u);
  EXPECT_EQ(cfg.hidden, 32u);
  EXPECT_DOUBLE_EQ(cfg.lambda, 1.0);
  EXPECT_DOUBLE_EQ(cfg.lr, 2e-4);
  EXPECT_DOUBLE_EQ(cfg.adam_beta1, 0.5);
  EXPECT_DOUBLE_EQ(cfg.adam_beta2, 0.999);
  EXPECT_TRUE(cfg.use_tnet);
  cfg.use_reciprocal = false;
  EXPECT_EQ(cfg.effective_lambda(), 0.0);
}

TEST(ReciprocalLoss, AffineInversePairIsZero) {
  Mlp g(MlpSpec{{2, 2}, Activation::relu, Activation::identity, 1});
  Mlp f(MlpSpec{{2, 2}, Activation::relu, Activation::identity, 2});
  // g(z) = zA + b with A = [[2, 1], [0, 1]], b = (0.5, -1).
  auto ga = g.weight(0).mutable_data();
  ga[0] = 2.0, ga[1] = 1.0, ga[2] = 0.0, ga[3] = 1.0;
  g.bias(0).mutable_data()[0] = 0.5;
  g.bias(0).mutable_data()[1] = -1.0;
  // f(x) = (x - b) A^-1.
  auto fa = f.weight(0).mutable_data();
  fa[0] = 0.5, fa[1] = -0.5, fa[2] = 0.0, fa[3] = 1.0;
  f.bias(0).mutable_data()[0] = -0.25;
  f.bias(0).mutable_data()[1] = 1.25;
  Rng rng(1);
  Tensor z = sample_fixed(50, 2, 1.0, rng);
  EXPECT_NEAR(reciprocal_loss(z, f, g).item(), 0.0, 1e-24);
}

TEST(ReciprocalLoss, ZeroLatentGivesSquaredOutputNorm) {
  Mlp g(MlpSpec{{2, 2}, Activation::relu, Activation::identity, 1});
  Mlp f(MlpSpec{{2, 2}, Activation::relu, Activation::identity, 2});
  for (auto& v : f.weight(0).mutable_data()) v = 0.0;
  f.bias(0).mutable_data()[0] = 0.3;
  f.bias(0).mutable_data()[1] = -0.4;
  EXPECT_NEAR(reciprocal_loss(Tensor::zeros({7, 2}), f, g).item(), 0.25, 1e-15);
}

TEST(Steps, CriticStepLeavesGeneratorUntouched) {
  TrainState state(small_config(1), 2);
  const auto gen_before = snapshot(state.nets.generator);
  const auto critic_before = snapshot(state.nets.critic);
  const auto tnet_before = snapshot(state.nets.tnet);
  Rng data(2);
  critic_step(state, sample_mixture(ring8(), 32, data));
  EXPECT_EQ(snapshot(state.nets.generator), gen_before);
  EXPECT_NE(snapshot(state.nets.critic), critic_before);
  EXPECT_NE(snapshot(state.nets.tnet), tnet_before);
}

TEST(Steps, GeneratorStepLeavesCriticAndTnetUntouched) {
  TrainState state(small_config(1), 2);
  const auto gen_before = snapshot(state.nets.generator);
  const auto critic_before = snapshot(state.nets.critic);
  const auto tnet_before = snapshot(state.nets.tnet);
  Rng data(2);
  generator_step(state, sample_mixture(ring8(), 32, data));
  EXPECT_NE(snapshot(state.nets.generator), gen_before);
  EXPECT_EQ(snapshot(state.nets.critic), critic_before);
  EXPECT_EQ(snapshot(state.nets.tnet), tnet_before);
  for (const auto& p : state.nets.critic.parameters()) EXPECT_TRUE(p.requires_grad());
}

TEST(Steps, FixedSamplerNeverTouchesTnet) {
  auto cfg = small_config(1);
  cfg.use_tnet = false;
  TrainState state(cfg, 2);
  const auto tnet_before = snapshot(state.nets.tnet);
  Rng data(2);
  critic_step(state, sample_mixture(ring8(), 32, data));
  EXPECT_EQ(snapshot(state.nets.tnet), tnet_before);
}

TEST(Steps, CriticStepDeterministicForSeed) {
  TrainState a(small_config(1, 9), 2), b(small_config(1, 9), 2);
  Rng da(4), db(4);
  const auto la = critic_step(a, sample_mixture(ring8(), 32, da));
  const auto lb = critic_step(b, sample_mixture(ring8(), 32, db));
  EXPECT_EQ(la.adversarial, lb.adversarial);
  EXPECT_EQ(la.reciprocal, lb.reciprocal);
  EXPECT_EQ(snapshot(a.nets.critic), snapshot(b.nets.critic));
}

TEST(Steps, GeneratorGradientNonzeroAtInit) {
  TrainState state(small_config(1), 2);
  Rng rng(5);
  Tensor real = sample_mixture(ring8(), 32, rng);
  Tensor z = sample_latent(32, state.latent(), rng);
  Tensor freqs = FreqSampler::fixed(2).draw(32, rng);
  state.nets.generator.zero_grad();
  backward(generator_objective(state, real, z, freqs));
  double norm = 0.0;
  for (const auto& p : state.nets.generator.parameters())
    for (double g : p.grad()) norm += g * g;
  EXPECT_GT(norm, 0.0);
  EXPECT_TRUE(std::isfinite(norm));
}

TEST(Steps, AnchorlessObjectiveUsesRealEmbedding) {
  auto cfg = small_config(1);
  cfg.use_anchor = false;
  cfg.lambda = 0.0;
  TrainState state(cfg, 2);
  Rng rng(6);
  Tensor real = sample_mixture(ring8(), 32, rng);
  Tensor z = sample_latent(32, state.latent(), rng);
  Tensor freqs = FreqSampler::fixed(2).draw(32, rng);
  CriticLosses out;
  Tensor total = critic_objective(state, real, z, freqs, out);
  Tensor fake = state.nets.critic.forward(state.nets.generator.forward(z));
  const double expect = -cf_distance(fake, state.nets.critic.forward(real), freqs, cfg.loss()).item();
  EXPECT_NEAR(total.item(), expect, 1e-12);
}

TEST(Train, ZeroIterationsLeavesNetsAtInit) {
  auto result = train(small_config(0), ring_source());
  const auto fresh = build_default_nets(2, 2, 16, 3);
  EXPECT_EQ(snapshot(result.state.nets.critic), snapshot(fresh.critic));
  EXPECT_EQ(snapshot(result.state.nets.generator), snapshot(fresh.generator));
  EXPECT_EQ(snapshot(result.state.nets.tnet), snapshot(fresh.tnet));
  EXPECT_EQ(result.telemetry.size(), 0u);
}

TEST(Train, TelemetryLengthAndBounds) {
  auto result = train(small_config(25), ring_source());
  ASSERT_EQ(result.telemetry.size(), 25u);
  for (const auto& r : result.telemetry.records) {
    EXPECT_LE(std::abs(r.critic_loss), 2.0 + 1e-6);
    EXPECT_GE(r.gen_loss, 0.0);
    EXPECT_LE(r.gen_loss, 2.0 + 1e-6);
    EXPECT_GE(r.reciprocal_loss, 0.0);
  }
}

TEST(Train, SameSeedSameTelemetry) {
  auto a = train(small_config(10, 17), ring_source());
  auto b = train(small_config(10, 17), ring_source());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a.telemetry.csv_row(i), b.telemetry.csv_row(i));
  auto c = train(small_config(10, 18), ring_source());
  EXPECT_NE(a.telemetry.csv_row(9), c.telemetry.csv_row(9));
}

TEST(Train, LambdaZeroStillTracksReciprocal) {
  auto cfg = small_config(5);
  cfg.lambda = 0.0;
  auto result = train(cfg, ring_source());
  for (const auto& r : result.telemetry.records) EXPECT_GT(r.reciprocal_loss, 0.0);
}

TEST(Train, WritesCsvAndCheckpoints) {
  const auto dir = temp_dir("out");
  TrainOptions opts;
  opts.out_dir = dir;
  opts.checkpoint_interval = 5;
  opts.csv_flush_interval = 3;
  auto result = train(small_config(10), ring_source(), opts);
  EXPECT_TRUE(fs::exists(dir / "checkpoint_5.bin"));
  EXPECT_TRUE(fs::exists(dir / "checkpoint_10.bin"));
  ASSERT_TRUE(fs::exists(dir / "checkpoint_final.bin"));
  std::ifstream csv(dir / "telemetry.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, TrainTelemetry::kCsvHeader);
  std::size_t rows = 0;
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 10u);

  TrainState restored(small_config(10), 2);
  restored.restore(load_checkpoint(dir / "checkpoint_final.bin"));
  EXPECT_EQ(snapshot(restored.nets.generator), snapshot(result.state.nets.generator));
  EXPECT_EQ(snapshot(restored.nets.critic), snapshot(result.state.nets.critic));
  EXPECT_EQ(snapshot(restored.nets.tnet), snapshot(result.state.nets.tnet));
  fs::remove_all(dir);
}

TEST(Train, NonFiniteLossAborts) {
  auto calls = std::make_shared<int>(0);
  DataSource poisoned{2, [calls](std::size_t n, Rng& rng) {
                        Tensor x = sample_mixture(ring8(), n, rng);
                        if (++*calls > 6) x.mutable_data()[0] = std::numeric_limits<double>::quiet_NaN();
                        return x;
                      }};
  try {
    train(small_config(20), poisoned);
    FAIL() << "expected TrainingAborted";
  } catch (const TrainingAborted& e) {
    EXPECT_EQ(e.iteration(), 3u);
    EXPECT_NE(std::string(e.what()).find("last telemetry window"), std::string::npos);
  }
}

TEST(Train, RejectsEmptySource) {
  EXPECT_THROW(train(small_config(1), DataSource{}), std::invalid_argument);
}

TEST(Telemetry, MovingAverage) {
  TrainTelemetry t;
  for (int i = 1; i <= 10; ++i) t.records.push_back({static_cast<double>(i), 0.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(t.moving_average(&TelemetryRecord::critic_loss, 10, 4), 8.5);
  EXPECT_DOUBLE_EQ(t.moving_average(&TelemetryRecord::critic_loss, 2, 4), 1.5);
  EXPECT_THROW(t.moving_average(&TelemetryRecord::critic_loss, 11), std::out_of_range);
  EXPECT_THROW(t.moving_average(&TelemetryRecord::critic_loss, 0), std::out_of_range);
}
