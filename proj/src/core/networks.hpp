#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "core/graph.hpp"
#include "core/lstm.hpp"
#include "core/tensor.hpp"

namespace mimgan {

struct NetConfig {
  std::size_t features = 1;     // n, variables per timestep
  std::size_t latent_dim = 15;  // per-timestep latent width
  std::size_t g_hidden = 100;
  std::size_t g_layers = 1;
  std::size_t d_hidden = 100;
  std::size_t d_layers = 1;

  void validate() const;
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Sequence-to-sequence generator: per-timestep latent codes through an LSTM
/// stack, then a tanh-squashed linear head h -> n at every step. Outputs lie
/// in (-1, 1).
struct GeneratorNet {
  std::size_t latent_dim = 0;
  std::size_t features = 0;
  std::vector<LstmLayer> lstm;
  Tensor head_w;  // (h x n)
  Tensor head_b;  // (n)
};

/// LSTM stack read out at the last timestep through an unbounded linear head
/// h -> 1. Higher scores mean "judged real".
struct DiscriminatorNet {
  std::size_t features = 0;
  std::vector<LstmLayer> lstm;
  Tensor head_w;  // (h x 1)
  Tensor head_b;  // (1)
};

struct NetworkParams {
  NetConfig config;
  GeneratorNet generator;
  DiscriminatorNet discriminator;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases,
/// forget-gate bias slice set to 1. Reproducible per seed.
NetworkParams init_params(const NetConfig& config, std::uint64_t seed);
/// All-zero weights and biases.
NetworkParams zero_params(const NetConfig& config);

/// Z: (m x S x latent_dim) -> (m x S x n). Parameters enter as constants.
Var generator_forward(Graph& g, const GeneratorNet& net, Var z);
/// Same, with parameters bound so backward() fills their grad slots.
Var generator_forward_train(Graph& g, GeneratorNet& net, Var z);
/// Value-only convenience wrapper.
Tensor generate(const GeneratorNet& net, const Tensor& z);

/// X: (m x S x n) -> (m) raw scores.
Var discriminator_forward(Graph& g, const DiscriminatorNet& net, Var x);
Var discriminator_forward_train(Graph& g, DiscriminatorNet& net, Var x);
std::vector<double> discriminate(const DiscriminatorNet& net, const Tensor& x);

/// Stable (name, tensor) listing used by optimizers and checkpoints.
/// Names look like "g.lstm0.w", "g.head.b", "d.lstm1.u".
std::vector<std::pair<std::string, Tensor*>> named_tensors(GeneratorNet& net);
std::vector<std::pair<std::string, Tensor*>> named_tensors(DiscriminatorNet& net);
std::vector<std::pair<std::string, Tensor*>> named_tensors(NetworkParams& params);

}  // namespace mimgan
