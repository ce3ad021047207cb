#pragma once

// Flat `key = value` run configuration with `#` comments.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "rcfgan/trainer.hpp"

namespace rcfgan {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& msg)
      : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct RunConfig {
  TrainConfig train;
  std::string dataset = "ring8";  // ring8 | grid25 | two_moons | bimodal1d | mnist
  std::string mnist_images;
  std::string mnist_labels;
  int mnist_digit = -1;  // -1: all digits
  std::string out = "runs/latest";
  std::size_t checkpoint_interval = 1000;
  std::size_t eval_samples = 2000;

  // swap
  std::string swap_digits = "1,2";
  std::size_t swap_samples = 1000;
  // alpha-sweep
  std::string alphas = "0.001,0.5,0.999";
  std::size_t sweep_steps = 3000;
  double sweep_lr = 1e-3;
  double sweep_freq_variance = 0.1;
  // two-sample
  std::size_t two_sample_n = 256;
  std::size_t two_sample_perms = 200;
  std::size_t two_sample_trials = 200;
  std::size_t two_sample_freqs = 64;
  double two_sample_shift = 1.0;
  double two_sample_level = 0.05;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("expected a number, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

inline std::string format_value(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
template <typename T>
  requires std::is_integral_v<T>
std::string format_value(T v) {
  return std::to_string(v);
}

template <typename T>
void assign(T& field, const std::string& v) {
  if constexpr (std::is_same_v<T, bool>) {
    field = parse_bool(v);
  } else if constexpr (std::is_same_v<T, std::string>) {
    field = v;
  } else {
    field = parse_number<T>(v);
  }
}

struct KeyBinding {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
KeyBinding bind_key(std::string name, Access access) {
  return KeyBinding{std::move(name), [access](RunConfig& c, const std::string& v) { assign(access(c), v); },
                    [access](const RunConfig& c) { return format_value(access(const_cast<RunConfig&>(c))); }};
}

#define RCFGAN_KEY(path, key) bind_key(key, [](RunConfig& c) -> auto& { return c.path; })

inline const std::vector<KeyBinding>& key_bindings() {
  static const std::vector<KeyBinding> keys = {
      RCFGAN_KEY(dataset, "dataset"),
      RCFGAN_KEY(mnist_images, "mnist_images"),
      RCFGAN_KEY(mnist_labels, "mnist_labels"),
      RCFGAN_KEY(mnist_digit, "mnist_digit"),
      RCFGAN_KEY(out, "out"),
      RCFGAN_KEY(checkpoint_interval, "checkpoint_interval"),
      RCFGAN_KEY(eval_samples, "eval_samples"),
      RCFGAN_KEY(train.b_d, "b_d"),
      RCFGAN_KEY(train.b_g, "b_g"),
      RCFGAN_KEY(train.b_t, "b_t"),
      RCFGAN_KEY(train.b_sigma, "b_sigma"),
      RCFGAN_KEY(train.lr, "lr"),
      RCFGAN_KEY(train.lambda, "lambda"),
      RCFGAN_KEY(train.alpha, "alpha"),
      RCFGAN_KEY(train.latent_dim, "latent_dim"),
      RCFGAN_KEY(train.hidden, "hidden"),
      RCFGAN_KEY(train.z_variance, "z_variance"),
      RCFGAN_KEY(train.t_variance, "t_variance"),
      RCFGAN_KEY(train.use_tnet, "use_tnet"),
      RCFGAN_KEY(train.use_anchor, "use_anchor"),
      RCFGAN_KEY(train.use_reciprocal, "use_reciprocal"),
      RCFGAN_KEY(train.iterations, "iterations"),
      RCFGAN_KEY(train.seed, "seed"),
      RCFGAN_KEY(train.adam_beta1, "adam_beta1"),
      RCFGAN_KEY(train.adam_beta2, "adam_beta2"),
      RCFGAN_KEY(train.adam_eps, "adam_eps"),
      RCFGAN_KEY(train.epsilon, "epsilon"),
      RCFGAN_KEY(swap_digits, "swap_digits"),
      RCFGAN_KEY(swap_samples, "swap_samples"),
      RCFGAN_KEY(alphas, "alphas"),
      RCFGAN_KEY(sweep_steps, "sweep_steps"),
      RCFGAN_KEY(sweep_lr, "sweep_lr"),
      RCFGAN_KEY(sweep_freq_variance, "sweep_freq_variance"),
      RCFGAN_KEY(two_sample_n, "two_sample_n"),
      RCFGAN_KEY(two_sample_perms, "two_sample_perms"),
      RCFGAN_KEY(two_sample_trials, "two_sample_trials"),
      RCFGAN_KEY(two_sample_freqs, "two_sample_freqs"),
      RCFGAN_KEY(two_sample_shift, "two_sample_shift"),
      RCFGAN_KEY(two_sample_level, "two_sample_level"),
  };
  return keys;
}

#undef RCFGAN_KEY

inline const KeyBinding* find_key(const std::string& name) {
  for (const auto& k : key_bindings())
    if (k.name == name) return &k;
  return nullptr;
}

}  // namespace detail

// Sets one key; throws std::invalid_argument on unknown keys or bad values.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto* binding = detail::find_key(key);
  if (!binding) throw std::invalid_argument("unknown key '" + key + "'");
  binding->set(cfg, value);
}

inline std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  const auto* binding = detail::find_key(key);
  if (!binding) throw std::invalid_argument("unknown key '" + key + "'");
  return binding->get(cfg);
}

inline void validate_run_config(const RunConfig& cfg) {
  cfg.train.validate();
  static const std::vector<std::string> datasets{"ring8", "grid25", "two_moons", "bimodal1d", "mnist"};
  if (std::find(datasets.begin(), datasets.end(), cfg.dataset) == datasets.end()) {
    throw std::invalid_argument("unknown dataset '" + cfg.dataset + "'");
  }
  if (cfg.mnist_digit < -1 || cfg.mnist_digit > 9) throw std::invalid_argument("mnist_digit must be -1 or 0..9");
  if (cfg.eval_samples == 0) throw std::invalid_argument("eval_samples must be positive");
  if (!(cfg.sweep_freq_variance > 0.0)) throw std::invalid_argument("sweep_freq_variance must be positive");
  if (!(cfg.two_sample_level > 0.0 && cfg.two_sample_level < 1.0)) {
    throw std::invalid_argument("two_sample_level must lie in (0, 1)");
  }
}

// Reads `key = value` lines applied on top of `base`. Errors carry line numbers.
inline RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>", RunConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> seen;
  std::size_t broke_at = 0;  // line after which the config stopped validating
  auto valid = [](const RunConfig& c) {
    try {
      validate_run_config(c);
      return true;
    } catch (const std::invalid_argument&) {
      return false;
    }
  };
  bool was_valid = valid(base);
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(hash == std::string::npos ? line : std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(source, lineno, "expected 'key = value', got '" + body + "'");
    const std::string key = detail::trim(std::string_view(body).substr(0, eq));
    const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError(source, lineno, "missing key before '='");
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError(source, lineno, "duplicate key '" + key + "'");
    }
    seen.push_back(key);
    try {
      set_config_value(base, key, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(source, lineno, std::string(e.what()) + (detail::find_key(key) ? " for key '" + key + "'" : ""));
    }
    const bool now_valid = valid(base);
    if (was_valid && !now_valid) broke_at = lineno;
    was_valid = now_valid;
  }
  try {
    validate_run_config(base);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(source, broke_at, e.what());
  }
  return base;
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_run_config(in, path.string(), std::move(base));
}

// Every key with its resolved value, in a form parse_run_config reads back.
inline void write_run_config(std::ostream& out, const RunConfig& cfg) {
  for (const auto& k : detail::key_bindings()) out << k.name << " = " << k.get(cfg) << '\n';
}

}  // namespace rcfgan
