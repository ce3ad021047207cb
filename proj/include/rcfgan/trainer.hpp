#pragma once

// Reciprocal adversarial training: the critic f (encoder) is pushed to map real
// data onto the latent anchor Z and generated data away from it, while also
// inverting the generator (z ~ f(g(z))); the generator g minimizes the CF
// distance between embedded real and generated samples.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcfgan/adam.hpp"
#include "rcfgan/ecf.hpp"
#include "rcfgan/freq_sampler.hpp"
#include "rcfgan/networks.hpp"
#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

struct TrainConfig {
  std::size_t b_d = 64;
  std::size_t b_g = 64;
  std::size_t b_t = 64;
  std::size_t b_sigma = 64;
  double lr = 2e-4;
  double lambda = 1.0;
  double alpha = 0.5;
  std::size_t latent_dim = 2;
  std::size_t hidden = 32;
  double z_variance = 0.3;
  double t_variance = 1.0;
  bool use_tnet = true;
  bool use_anchor = true;
  bool use_reciprocal = true;
  std::size_t iterations = 5000;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double epsilon = kSqrtEps;

  double effective_lambda() const { return use_reciprocal ? lambda : 0.0; }

  AdamConfig adam() const { return AdamConfig{lr, adam_beta1, adam_beta2, adam_eps}; }

  CfLossConfig loss() const { return CfLossConfig{alpha, b_t, epsilon}; }

  void validate() const {
    if (b_d == 0 || b_g == 0 || b_t == 0 || b_sigma == 0) throw std::invalid_argument("batch sizes must be >= 1");
    if (use_tnet && b_t != b_sigma) throw std::invalid_argument("b_t must equal b_sigma when the t-net is used");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (latent_dim == 0 || hidden == 0) throw std::invalid_argument("latent_dim and hidden must be positive");
    if (!(z_variance > 0.0) || !(t_variance > 0.0)) throw std::invalid_argument("noise variances must be positive");
  }
};

struct TelemetryRecord {
  double critic_loss = 0.0;
  double gen_loss = 0.0;
  double reciprocal_loss = 0.0;
  double embed_dist = 0.0;
};

struct TrainTelemetry {
  static constexpr std::size_t kWindow = 500;

  std::vector<TelemetryRecord> records;

  std::size_t size() const { return records.size(); }

  // Mean of `field` over the `window` records ending at 1-based iteration `upto`.
  double moving_average(double TelemetryRecord::*field, std::size_t upto, std::size_t window = kWindow) const {
    if (upto == 0 || upto > records.size()) throw std::out_of_range("moving_average: iteration out of range");
    const std::size_t begin = upto > window ? upto - window : 0;
    double s = 0.0;
    for (std::size_t i = begin; i < upto; ++i) s += records[i].*field;
    return s / static_cast<double>(upto - begin);
  }

  std::string csv_row(std::size_t i) const {
    std::ostringstream os;
    os << std::setprecision(17) << (i + 1) << ',' << records[i].critic_loss << ',' << records[i].gen_loss << ','
       << records[i].reciprocal_loss << ',' << records[i].embed_dist;
    return os.str();
  }

  static constexpr const char* kCsvHeader = "iteration,critic_loss,gen_loss,reciprocal_loss,embed_dist";
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t iteration, const std::string& what) : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

// Draws real-data batches of a fixed feature width.
struct DataSource {
  std::size_t dim = 0;
  std::function<Tensor(std::size_t, Rng&)> sample;
  Activation generator_output = Activation::identity;
};

struct TrainState {
  TrainConfig config;
  DefaultNets nets;
  AdamState critic_opt;
  AdamState gen_opt;
  AdamState tnet_opt;
  Rng rng;
  std::size_t iteration = 0;

  TrainState(const TrainConfig& cfg, std::size_t data_dim, Activation generator_output = Activation::identity)
      : config(cfg),
        nets(build_default_nets(data_dim, cfg.latent_dim, cfg.hidden, cfg.seed, generator_output)),
        rng(cfg.seed) {
    config.validate();
    auto cp = nets.critic.parameters();
    auto gp = nets.generator.parameters();
    auto tp = nets.tnet.parameters();
    critic_opt = AdamState::for_params(cp);
    gen_opt = AdamState::for_params(gp);
    tnet_opt = AdamState::for_params(tp);
  }

  FreqSampler sampler() const {
    return config.use_tnet ? FreqSampler::mixture(nets.tnet, config.t_variance)
                           : FreqSampler::fixed(config.latent_dim, config.t_variance);
  }

  LatentSpec latent() const { return LatentSpec(config.latent_dim, config.z_variance); }

  std::vector<NamedTensor> checkpoint_records() const {
    std::vector<NamedTensor> out;
    append_records(out, nets.critic, "critic");
    append_records(out, nets.generator, "generator");
    append_records(out, nets.tnet, "tnet");
    return out;
  }

  void restore(const std::vector<NamedTensor>& records) {
    restore_from(nets.critic, records, "critic");
    restore_from(nets.generator, records, "generator");
    restore_from(nets.tnet, records, "tnet");
  }
};

namespace detail {

// Turns off gradient tracking on a parameter set for its lifetime.
class FreezeGuard {
 public:
  explicit FreezeGuard(std::vector<Tensor> params) : params_(std::move(params)) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<Tensor> params_;
};

inline void update(Mlp& net, AdamState& state, const AdamConfig& cfg) {
  auto params = net.parameters();
  adam_step(params, state, cfg);
  net.zero_grad();
}

}  // namespace detail

// (1/b) sum_i ||z_i - f(g(z_i))||^2
inline Tensor reciprocal_loss(const Tensor& z, const Mlp& critic, const Mlp& generator) {
  return scale(sum(square(z - critic.forward(generator.forward(z)))), 1.0 / static_cast<double>(z.dim(0)));
}

struct CriticLosses {
  double adversarial = 0.0;
  double reciprocal = 0.0;
  double embed_dist = 0.0;
};

// Critic objective for given draws; returns the scalar to differentiate.
inline Tensor critic_objective(const TrainState& state, const Tensor& batch_real, const Tensor& z,
                               const Tensor& freqs, CriticLosses& out) {
  const auto& cfg = state.config;
  const auto loss_cfg = cfg.loss();
  Tensor fake;
  {
    NoGradGuard no_grad;
    fake = state.nets.generator.forward(z);
  }
  Tensor f_fake = state.nets.critic.forward(fake);
  Tensor f_real = state.nets.critic.forward(batch_real);
  Tensor adversarial;
  Tensor real_to_anchor = cf_distance(f_real, z, freqs, loss_cfg);
  if (cfg.use_anchor) {
    adversarial = neg(cf_distance(f_fake, z, freqs, loss_cfg) - real_to_anchor);
  } else {
    adversarial = neg(cf_distance(f_fake, f_real, freqs, loss_cfg));
  }
  Tensor recip = scale(sum(square(z - f_fake)), 1.0 / static_cast<double>(z.dim(0)));
  out.adversarial = adversarial.item();
  out.reciprocal = recip.item();
  out.embed_dist = real_to_anchor.item();
  const double lambda = cfg.effective_lambda();
  return lambda > 0.0 ? adversarial + scale(recip, lambda) : adversarial;
}

namespace detail {

inline void require_finite(const TrainState& state, std::initializer_list<double> values, const char* step) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw TrainingAborted(state.iteration, std::string("non-finite loss in ") + step + " at iteration " +
                                                 std::to_string(state.iteration + 1));
    }
  }
}

}  // namespace detail

// One critic (and t-net) update. Generator parameters are not touched.
inline CriticLosses critic_step(TrainState& state, const Tensor& batch_real) {
  const auto& cfg = state.config;
  Tensor z = sample_latent(cfg.b_g, state.latent(), state.rng);
  Tensor freqs = state.sampler().draw(cfg.b_t, state.rng);
  CriticLosses losses;
  state.nets.critic.zero_grad();
  state.nets.tnet.zero_grad();
  Tensor total = critic_objective(state, batch_real, z, freqs, losses);
  detail::require_finite(state, {losses.adversarial, losses.reciprocal, losses.embed_dist}, "critic step");
  backward(total);
  const auto adam = cfg.adam();
  if (cfg.use_tnet) detail::update(state.nets.tnet, state.tnet_opt, adam);
  detail::update(state.nets.critic, state.critic_opt, adam);
  return losses;
}

// Generator objective C_T(f(g(z)), f(x)).
inline Tensor generator_objective(const TrainState& state, const Tensor& batch_real, const Tensor& z,
                                  const Tensor& freqs) {
  Tensor f_real;
  {
    NoGradGuard no_grad;
    f_real = state.nets.critic.forward(batch_real);
  }
  Tensor f_fake = state.nets.critic.forward(state.nets.generator.forward(z));
  return cf_distance(f_fake, f_real, freqs, state.config.loss());
}

// One generator update. Critic and t-net parameters are not touched.
inline double generator_step(TrainState& state, const Tensor& batch_real) {
  const auto& cfg = state.config;
  Tensor z = sample_latent(cfg.b_g, state.latent(), state.rng);
  Tensor freqs;
  {
    NoGradGuard no_grad;
    freqs = state.sampler().draw(cfg.b_t, state.rng);
  }
  detail::FreezeGuard freeze(state.nets.critic.parameters());
  state.nets.generator.zero_grad();
  Tensor loss = generator_objective(state, batch_real, z, freqs);
  const double value = loss.item();
  detail::require_finite(state, {value}, "generator step");
  backward(loss);
  detail::update(state.nets.generator, state.gen_opt, cfg.adam());
  return value;
}

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // telemetry.csv and checkpoints
  std::size_t checkpoint_interval = 0;           // 0: final checkpoint only
  std::size_t csv_flush_interval = 100;
  std::function<void(std::size_t, const TelemetryRecord&)> on_iteration;
};

struct TrainResult {
  TrainState state;
  TrainTelemetry telemetry;
};

namespace detail {

inline std::string telemetry_dump(const TrainTelemetry& t) {
  std::ostringstream os;
  os << TrainTelemetry::kCsvHeader << '\n';
  const std::size_t begin = t.size() > TrainTelemetry::kWindow ? t.size() - TrainTelemetry::kWindow : 0;
  for (std::size_t i = begin; i < t.size(); ++i) os << t.csv_row(i) << '\n';
  return os.str();
}

}  // namespace detail

// Alternates one critic step and one generator step per iteration.
inline TrainResult train(const TrainConfig& config, const DataSource& source, const TrainOptions& options = {}) {
  if (source.dim == 0 || !source.sample) throw std::invalid_argument("train: data source is not set up");
  TrainResult result{TrainState(config, source.dim, source.generator_output), {}};
  TrainState& state = result.state;
  TrainTelemetry& telemetry = result.telemetry;
  telemetry.records.reserve(config.iterations);

  std::ofstream csv;
  std::string pending;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    csv.open(*options.out_dir / "telemetry.csv", std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write telemetry.csv in " + options.out_dir->string());
    csv << TrainTelemetry::kCsvHeader << '\n';
    csv.flush();
  }
  auto flush = [&] {
    if (csv.is_open() && !pending.empty()) {
      csv << pending;
      csv.flush();
      pending.clear();
    }
  };
  auto write_checkpoint = [&](const std::string& name) {
    if (options.out_dir) save_checkpoint(*options.out_dir / name, state.checkpoint_records());
  };

  try {
    for (std::size_t it = 0; it < config.iterations; ++it) {
      state.iteration = it;
      Tensor real_c = source.sample(config.b_d, state.rng);
      CriticLosses c = critic_step(state, real_c);
      Tensor real_g = source.sample(config.b_d, state.rng);
      const double g = generator_step(state, real_g);
      TelemetryRecord rec{c.adversarial, g, c.reciprocal, c.embed_dist};
      telemetry.records.push_back(rec);
      if (csv.is_open()) {
        pending += telemetry.csv_row(it) + '\n';
        if ((it + 1) % options.csv_flush_interval == 0) flush();
      }
      if (options.checkpoint_interval > 0 && (it + 1) % options.checkpoint_interval == 0) {
        write_checkpoint("checkpoint_" + std::to_string(it + 1) + ".bin");
      }
      if (options.on_iteration) options.on_iteration(it + 1, rec);
    }
  } catch (const TrainingAborted& e) {
    flush();
    throw TrainingAborted(e.iteration(), std::string(e.what()) + "\nlast telemetry window:\n" +
                                             detail::telemetry_dump(telemetry));
  }
  flush();
  write_checkpoint("checkpoint_final.bin");
  state.iteration = config.iterations;
  return result;
}

}  // namespace rcfgan
