// rcfgan: train the reciprocal CF-GAN and run its diagnostics.
//
// Exit codes: 0 ok, 1 property failure, 2 usage or config error, 3 runtime abort.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rcfgan/cli.hpp"

namespace {

namespace fs = std::filesystem;
using rcfgan::RunConfig;
using rcfgan::cli::ExitCode;
using rcfgan::cli::UsageError;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "random seed (overrides the config)");
  cmd->add_option("--out", f.out, "output directory (overrides the config)");
  cmd->add_flag("--quiet", f.quiet, "suppress progress output");
  cmd->add_option("--set", f.overrides, "extra key=value config entries, applied after --config")->take_all();
}

// Finds the image and label IDX files inside an MNIST directory.
std::pair<std::string, std::string> mnist_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("--mnist: not a directory: " + dir.string());
  std::string images, labels;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.find("idx3") != std::string::npos && name.find("images") != std::string::npos) images = e.path().string();
    if (name.find("idx1") != std::string::npos && name.find("labels") != std::string::npos) labels = e.path().string();
  }
  if (images.empty() || labels.empty()) throw UsageError("--mnist: no *images*idx3* / *labels*idx1* files in " + dir.string());
  return {images, labels};
}

RunConfig resolve(const CommonFlags& f, const std::string& command) {
  RunConfig base;
  base.out = "runs/" + command;
  RunConfig cfg = f.config.empty() ? base : rcfgan::load_run_config(f.config, base);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    try {
      rcfgan::set_config_value(cfg, rcfgan::detail::trim(kv.substr(0, eq)), rcfgan::detail::trim(kv.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw UsageError(std::string("--set ") + kv + ": " + e.what());
    }
  }
  if (f.seed) cfg.train.seed = *f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  return cfg;
}

void validate(const RunConfig& cfg) {
  try {
    rcfgan::validate_run_config(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reciprocal characteristic-function GAN: training and diagnostics"};
  app.require_subcommand(1);

  CommonFlags common;

  auto* train = app.add_subcommand("train", "train critic, generator and t-net on a toy mixture or MNIST");
  add_common(train, common);
  std::string dataset, mnist_dir, mnist_images, mnist_labels;
  std::optional<std::size_t> iterations;
  std::optional<int> digit;
  train->add_option("--dataset", dataset, "ring8 | grid25 | two_moons | bimodal1d | mnist");
  train->add_option("--iterations", iterations, "training iterations");
  train->add_option("--mnist", mnist_dir, "directory holding the MNIST IDX files");
  train->add_option("--mnist-images", mnist_images, "MNIST image IDX file");
  train->add_option("--mnist-labels", mnist_labels, "MNIST label IDX file");
  train->add_option("--digit", digit, "train on a single MNIST digit");

  auto* validate_metric = app.add_subcommand("validate-metric", "run the CF distance property suites");
  add_common(validate_metric, common);
  bool inject_fault = false;
  validate_metric->add_flag("--inject-fault", inject_fault, "flip a sign in c(t) to check that the suites catch it");

  auto* swap = app.add_subcommand("swap", "swap CF phase and amplitude between two MNIST digit classes");
  add_common(swap, common);
  std::string digits;
  std::optional<std::size_t> swap_samples;
  swap->add_option("--digits", digits, "two digits, e.g. 1,2");
  swap->add_option("--mnist", mnist_dir, "directory holding the MNIST IDX files");
  swap->add_option("--mnist-images", mnist_images, "MNIST image IDX file");
  swap->add_option("--mnist-labels", mnist_labels, "MNIST label IDX file");
  swap->add_option("--samples", swap_samples, "samples per output set");

  auto* sweep = app.add_subcommand("alpha-sweep", "train critic-free generators across alpha values");
  add_common(sweep, common);
  std::string alphas, sweep_dataset = "bimodal1d";
  std::optional<std::size_t> steps;
  sweep->add_option("--alphas", alphas, "comma-separated alpha values in [0, 1]");
  sweep->add_option("--steps", steps, "training steps per alpha");
  sweep->add_option("--dataset", sweep_dataset, "mixture preset")->capture_default_str();

  auto* two = app.add_subcommand("two-sample", "permutation two-sample test calibration and power");
  add_common(two, common);
  bool null_only = false, power_only = false;
  std::optional<std::size_t> trials, perms, n;
  two->add_flag("--null", null_only, "only the null calibration study");
  two->add_flag("--power", power_only, "only the power study");
  two->add_option("--trials", trials, "tests per study");
  two->add_option("--perms", perms, "permutations per test (at least 100)");
  two->add_option("--n", n, "samples per group");

  auto* grad = app.add_subcommand("grad-check", "compare autodiff gradients with central differences");
  add_common(grad, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  rcfgan::cli::NullStream null;
  try {
    if (*train) {
      RunConfig cfg = resolve(common, "train");
      if (!dataset.empty()) cfg.dataset = dataset;
      if (iterations) cfg.train.iterations = *iterations;
      if (!mnist_dir.empty()) std::tie(cfg.mnist_images, cfg.mnist_labels) = mnist_files(mnist_dir);
      if (!mnist_images.empty()) cfg.mnist_images = mnist_images;
      if (!mnist_labels.empty()) cfg.mnist_labels = mnist_labels;
      if (digit) cfg.mnist_digit = *digit;
      validate(cfg);
      return rcfgan::cli::cmd_train(cfg, common.quiet ? null : std::cout);
    }
    if (*validate_metric) {
      RunConfig cfg = resolve(common, "validate-metric");
      validate(cfg);
      return rcfgan::cli::cmd_validate_metric(cfg, inject_fault, common.quiet ? null : std::cout);
    }
    if (*swap) {
      RunConfig cfg = resolve(common, "swap");
      if (!digits.empty()) cfg.swap_digits = digits;
      if (swap_samples) cfg.swap_samples = *swap_samples;
      if (!mnist_dir.empty()) std::tie(cfg.mnist_images, cfg.mnist_labels) = mnist_files(mnist_dir);
      if (!mnist_images.empty()) cfg.mnist_images = mnist_images;
      if (!mnist_labels.empty()) cfg.mnist_labels = mnist_labels;
      validate(cfg);
      return rcfgan::cli::cmd_swap(cfg, common.quiet ? null : std::cout);
    }
    if (*sweep) {
      RunConfig cfg = resolve(common, "alpha-sweep");
      if (!alphas.empty()) cfg.alphas = alphas;
      if (steps) cfg.sweep_steps = *steps;
      validate(cfg);
      return rcfgan::cli::cmd_alpha_sweep(cfg, sweep_dataset, common.quiet ? null : std::cout);
    }
    if (*two) {
      if (null_only && power_only) throw UsageError("--null and --power are mutually exclusive");
      RunConfig cfg = resolve(common, "two-sample");
      if (trials) cfg.two_sample_trials = *trials;
      if (perms) cfg.two_sample_perms = *perms;
      if (n) cfg.two_sample_n = *n;
      validate(cfg);
      const auto mode = null_only    ? rcfgan::cli::TwoSampleMode::null_only
                        : power_only ? rcfgan::cli::TwoSampleMode::power_only
                                     : rcfgan::cli::TwoSampleMode::both;
      return rcfgan::cli::cmd_two_sample(cfg, mode, common.quiet ? null : std::cout);
    }
    if (*grad) {
      RunConfig cfg = resolve(common, "grad-check");
      validate(cfg);
      return rcfgan::cli::cmd_grad_check(cfg, common.quiet ? null : std::cout);
    }
  } catch (const rcfgan::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const rcfgan::IdxError& e) {
    std::cerr << "dataset error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::runtime_abort);
  }
  return static_cast<int>(ExitCode::usage);
}
