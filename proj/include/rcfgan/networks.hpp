#pragma once

// Fully-connected networks for the critic f, generator g and t-net h, plus the
// binary checkpoint format.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <iterator>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "rcfgan/rng.hpp"
#include "rcfgan/tensor.hpp"

namespace rcfgan {

enum class Activation { relu, tanh, identity };

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

// Critic outputs must stay inside (-1, 1)^m, so a critic requires a tanh head.
enum class NetRole { generic, critic, generator, tnet };

struct MlpSpec {
  std::vector<std::size_t> layer_dims;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::identity;
  std::uint64_t init_seed = 0;
  NetRole role = NetRole::generic;

  void validate() const {
    if (layer_dims.size() < 2) throw std::invalid_argument("MlpSpec needs at least input and output widths");
    for (auto d : layer_dims)
      if (d == 0) throw std::invalid_argument("MlpSpec layer widths must be positive");
    if (role == NetRole::critic && output_activation != Activation::tanh) {
      throw std::invalid_argument("critic networks must use a tanh output activation");
    }
  }
};

inline Tensor activate(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

class Mlp {
 public:
  Mlp() = default;

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  explicit Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    Rng rng(spec_.init_seed);
    for (std::size_t l = 0; l + 1 < spec_.layer_dims.size(); ++l) {
      const std::size_t fan_in = spec_.layer_dims[l], fan_out = spec_.layer_dims[l + 1];
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::vector<double> w(fan_in * fan_out);
      for (auto& v : w) v = limit * (2.0 * rng.uniform() - 1.0);
      weights_.push_back(Tensor::from({fan_in, fan_out}, std::move(w), true));
      biases_.push_back(Tensor::zeros({fan_out}, true));
    }
  }

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t input_dim() const { return spec_.layer_dims.front(); }
  std::size_t output_dim() const { return spec_.layer_dims.back(); }

  Tensor& weight(std::size_t layer) { return weights_.at(layer); }
  Tensor& bias(std::size_t layer) { return biases_.at(layer); }
  const Tensor& weight(std::size_t layer) const { return weights_.at(layer); }
  const Tensor& bias(std::size_t layer) const { return biases_.at(layer); }

  Tensor forward(const Tensor& input) const {
    if (input.rank() != 2 || input.dim(1) != input_dim()) {
      throw DimensionError("Mlp::forward: expected [b x " + std::to_string(input_dim()) + "], got " +
                           shape_str(input.shape()));
    }
    Tensor h = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      h = add_row(matmul(h, weights_[l]), biases_[l]);
      h = activate(l + 1 == weights_.size() ? spec_.output_activation : spec_.hidden_activation, h);
    }
    return h;
  }

  Tensor operator()(const Tensor& input) const { return forward(input); }

  // Handles share storage with the network, so optimizer updates land in place.
  std::vector<Tensor> parameters() const {
    std::vector<Tensor> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back(weights_[l]);
      out.push_back(biases_[l]);
    }
    return out;
  }

  std::vector<std::pair<std::string, Tensor>> named_parameters(const std::string& prefix) const {
    std::vector<std::pair<std::string, Tensor>> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.emplace_back(prefix + "." + std::to_string(l) + ".weight", weights_[l]);
      out.emplace_back(prefix + "." + std::to_string(l) + ".bias", biases_[l]);
    }
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
  }

  void zero_grad() {
    for (auto& w : weights_) w.zero_grad();
    for (auto& b : biases_) b.zero_grad();
  }

  // Independent copy of all parameter values.
  Mlp clone() const {
    Mlp out;
    out.spec_ = spec_;
    for (const auto& w : weights_) out.weights_.push_back(Tensor::from(w.shape(), {w.data().begin(), w.data().end()}, true));
    for (const auto& b : biases_) out.biases_.push_back(Tensor::from(b.shape(), {b.data().begin(), b.data().end()}, true));
    return out;
  }

 private:
  MlpSpec spec_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

struct DefaultNets {
  Mlp critic;
  Mlp generator;
  Mlp tnet;
};

// critic: data_dim -> hidden -> hidden -> m (tanh head)
// generator: m -> hidden -> hidden -> data_dim
// t-net: three layers of width m, identity head
inline DefaultNets build_default_nets(std::size_t data_dim, std::size_t latent_dim, std::size_t hidden,
                                      std::uint64_t seed = 0,
                                      Activation generator_output = Activation::identity) {
  if (data_dim == 0 || latent_dim == 0 || hidden == 0) {
    throw std::invalid_argument("build_default_nets: all dimensions must be positive");
  }
  DefaultNets nets;
  nets.critic = Mlp(MlpSpec{{data_dim, hidden, hidden, latent_dim}, Activation::relu, Activation::tanh,
                            seed * 3 + 1, NetRole::critic});
  nets.generator = Mlp(MlpSpec{{latent_dim, hidden, hidden, data_dim}, Activation::relu, generator_output,
                               seed * 3 + 2, NetRole::generator});
  nets.tnet = Mlp(MlpSpec{{latent_dim, latent_dim, latent_dim, latent_dim}, Activation::relu, Activation::identity,
                          seed * 3 + 3, NetRole::tnet});
  return nets;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Layout, all integers little-endian:
//   magic "RCFGCKPT" (8 bytes), u32 version, u32 record count
//   per record: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               f64 payload[prod(dims)]

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 8> kCheckpointMagic{'R', 'C', 'F', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

namespace detail {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos));
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return value;
}

}  // namespace detail

inline std::string encode_checkpoint(const std::vector<NamedTensor>& records) {
  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    if (shape_numel(r.shape) != r.values.size()) {
      throw CheckpointError("record '" + r.name + "' shape does not match its payload");
    }
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(r.shape.size()));
    for (auto d : r.shape) detail::put_le<std::uint64_t>(out, d);
    for (double v : r.values) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

inline std::vector<NamedTensor> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || !std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw CheckpointError("not a checkpoint: bad magic");
  }
  std::size_t pos = 8;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto count = detail::get_le<std::uint32_t>(bytes, pos);
  std::vector<NamedTensor> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor r;
    const auto len = detail::get_le<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw CheckpointError("checkpoint truncated in record name");
    r.name = bytes.substr(pos, len);
    pos += len;
    const auto rank = detail::get_le<std::uint32_t>(bytes, pos);
    for (std::uint32_t d = 0; d < rank; ++d) r.shape.push_back(detail::get_le<std::uint64_t>(bytes, pos));
    const std::size_t n = shape_numel(r.shape);
    if (pos + 8 * n > bytes.size()) throw CheckpointError("checkpoint truncated in payload of '" + r.name + "'");
    r.values.resize(n);
    for (auto& v : r.values) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, pos));
    records.push_back(std::move(r));
  }
  if (pos != bytes.size()) throw CheckpointError("trailing bytes after last checkpoint record");
  return records;
}

// Writes through a temporary file and renames, so an interrupted save never
// replaces a valid checkpoint with a partial one.
inline void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& records) {
  const std::string bytes = encode_checkpoint(records);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

inline void append_records(std::vector<NamedTensor>& out, const Mlp& net, const std::string& prefix) {
  for (const auto& [name, t] : net.named_parameters(prefix)) {
    out.push_back(NamedTensor{name, t.shape(), {t.data().begin(), t.data().end()}});
  }
}

// Copies matching records into the network's parameters.
inline void restore_from(Mlp& net, const std::vector<NamedTensor>& records, const std::string& prefix) {
  for (auto& [name, t] : net.named_parameters(prefix)) {
    auto it = std::find_if(records.begin(), records.end(), [&](const NamedTensor& r) { return r.name == name; });
    if (it == records.end()) throw CheckpointError("checkpoint has no record '" + name + "'");
    if (it->shape != t.shape()) {
      throw CheckpointError("record '" + name + "' has shape " + shape_str(it->shape) + ", network expects " +
                            shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(it->values.begin(), it->values.end(), dst.begin());
  }
}

}  // namespace rcfgan
