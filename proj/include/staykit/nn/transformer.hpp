#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "staykit/nn/autograd.hpp"
#include "staykit/traj.hpp"

namespace staykit::nn {

struct EncoderConfig {
  std::size_t d_model = 512;
  std::size_t num_layers = 6;
  std::size_t num_heads = 8;
  std::size_t d_ff = 2048;
  double dropout = 0.1;
  std::uint64_t seed = 1;
  std::size_t input_dim = 4;

  void validate() const;

  // Original base-encoder dimensions.
  static EncoderConfig base();
  // Laptop-scale configuration used by the test and acceptance suites.
  static EncoderConfig small();
};

enum class Init { zeros, ones, xavier };

// Named parameter container; iteration order is lexicographic, which keeps
// optimizer updates and checkpoints deterministic.
class ParamStore {
 public:
  // Creates a tensor initialized per `init` (requires_grad), or binds an
  // existing one of the same shape without touching it or the rng.
  Var create_or_get(const std::string& name, std::size_t rows, std::size_t cols, Init init,
                    Rng& rng);
  Var get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) > 0; }
  void insert(const std::string& name, Var tensor);

  const std::map<std::string, Var>& all() const { return params_; }
  void zero_grads();
  std::size_t total_size() const;

  // Deep copy (fresh tensors, zero grads).
  ParamStore clone() const;
  // Copies values for identically named tensors.
  void copy_values_from(const ParamStore& other);

 private:
  std::map<std::string, Var> params_;
};

// Sinusoidal positional encoding, row-major [n x d_model].
std::vector<double> sinusoidal_encoding(std::size_t n, std::size_t d_model);

// Post-norm transformer encoder: input projection (scaled by sqrt(d_model)),
// sinusoidal positions, then num_layers of multi-head self-attention and
// feedforward sublayers with residual connections. Padded positions are
// excluded from attention keys and their output rows are zeroed.
class TransformerEncoder {
 public:
  TransformerEncoder(const EncoderConfig& config, ParamStore& store);

  // x is [n x input_dim]; mask holds 1.0 for real rows, 0.0 for padding.
  Var forward(Tape& tape, const Var& x, const std::vector<double>& mask, bool training,
              Rng& dropout_rng) const;

  const EncoderConfig& config() const { return cfg_; }

 private:
  struct Layer {
    Var wq, bq, wk, bk, wv, bv, wo, bo;
    Var w1, b1, w2, b2;
    Var ln1_g, ln1_b, ln2_g, ln2_b;
  };

  EncoderConfig cfg_;
  Var w_in_, b_in_;
  std::vector<Layer> layers_;
};

// Feedforward + sigmoid decoder: pointwise stay probability.
struct StayHead {
  Var w, b;

  static StayHead create(ParamStore& store, std::size_t d_model, std::uint64_t seed);
  Var forward(Tape& tape, const Var& emb) const;  // [n x 1] probabilities
};

// Feedforward + row softmax decoder over M transportation modes.
struct ModeHead {
  Var w, b;
  std::size_t num_modes = 5;

  static ModeHead create(ParamStore& store, std::size_t d_model, std::size_t num_modes,
                         std::uint64_t seed);
  Var forward(Tape& tape, const Var& emb) const;  // [n x M] rows on the simplex
};

// Forecast heads over emb_agg = [masked mean || last masked-in row].
struct SslHeads {
  Var wv, bv;  // velocity, no activation
  Var wa, ba;  // (sin, cos) through tanh

  static SslHeads create(ParamStore& store, std::size_t d_model, std::uint64_t seed);
  // Returns {v_hat [1x1], ang_hat [1x2]}.
  std::pair<Var, Var> forward(Tape& tape, const Var& emb,
                              const std::vector<double>& mask) const;
};

}  // namespace staykit::nn
