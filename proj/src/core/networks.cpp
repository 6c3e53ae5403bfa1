#include "core/networks.hpp"

#include <cmath>
#include <random>
#include <type_traits>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace mimgan {

void NetConfig::validate() const {
  if (features == 0 || latent_dim == 0 || g_hidden == 0 || g_layers == 0 || d_hidden == 0 ||
      d_layers == 0) {
    throw ConfigError("network dimensions must all be positive");
  }
}

namespace {

void glorot(Tensor& t, std::mt19937_64& rng) {
  const double fan_out = static_cast<double>(t.dim(0));
  const double fan_in = static_cast<double>(t.rank() > 1 ? t.dim(1) : 1);
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.mutable_data()) v = dist(rng);
}

std::vector<LstmLayer> make_stack(std::size_t input, std::size_t hidden, std::size_t layers) {
  std::vector<LstmLayer> stack;
  for (std::size_t i = 0; i < layers; ++i) stack.push_back(LstmLayer::zeros(i == 0 ? input : hidden, hidden));
  return stack;
}

void init_stack(std::vector<LstmLayer>& stack, std::mt19937_64& rng) {
  for (LstmLayer& l : stack) {
    glorot(l.w, rng);
    glorot(l.u, rng);
    auto b = l.b.mutable_data();
    for (std::size_t k = 0; k < l.hidden; ++k) b[l.hidden + k] = 1.0;
  }
}

// Bound parameters for non-const nets, constants otherwise.
template <class NetRef, class TensorRef>
Var make_leaf(Graph& g, TensorRef& t) {
  if constexpr (std::is_const_v<std::remove_reference_t<NetRef>>) {
    return g.input(t);
  } else {
    return g.param(t);
  }
}

template <class NetRef>
Var run_stack(Graph& g, NetRef& net, Var x) {
  const std::size_t m = x.shape()[0];
  Var h = x;
  for (auto& layer : net.lstm) {
    layer.validate();
    Var zeros_h = g.input(Tensor({m, layer.hidden}));
    Var zeros_c = g.input(Tensor({m, layer.hidden}));
    h = lstm_sequence(h, make_leaf<NetRef>(g, layer.w), make_leaf<NetRef>(g, layer.u),
                      make_leaf<NetRef>(g, layer.b), zeros_h, zeros_c);
  }
  return h;
}

template <class NetRef>
Var generator_impl(Graph& g, NetRef& net, Var z) {
  const Shape& s = z.shape();
  if (s.size() != 3 || s[2] != net.latent_dim) {
    throw ShapeError("generator: latent input " + shape_to_string(s) + " does not match latent_dim " +
                     std::to_string(net.latent_dim));
  }
  const std::size_t m = s[0], steps = s[1];
  Var h = run_stack(g, net, z);
  const std::size_t hidden = h.shape()[2];
  Var flat = op::reshape(h, {m * steps, hidden});
  Var y = op::add_bias(op::matmul(flat, make_leaf<NetRef>(g, net.head_w)), make_leaf<NetRef>(g, net.head_b));
  return op::reshape(op::tanh(y), {m, steps, net.features});
}

template <class NetRef>
Var discriminator_impl(Graph& g, NetRef& net, Var x) {
  const Shape& s = x.shape();
  if (s.size() != 3 || s[2] != net.features) {
    throw ShapeError("discriminator: input " + shape_to_string(s) + " does not match " +
                     std::to_string(net.features) + " features");
  }
  const std::size_t m = s[0], steps = s[1];
  Var h = run_stack(g, net, x);
  const std::size_t hidden = h.shape()[2];
  Var last = op::reshape(op::slice(h, 1, steps - 1, steps), {m, hidden});
  Var y = op::add_bias(op::matmul(last, make_leaf<NetRef>(g, net.head_w)), make_leaf<NetRef>(g, net.head_b));
  return op::reshape(y, {m});
}

}  // namespace

NetworkParams zero_params(const NetConfig& config) {
  config.validate();
  NetworkParams p;
  p.config = config;
  p.generator.latent_dim = config.latent_dim;
  p.generator.features = config.features;
  p.generator.lstm = make_stack(config.latent_dim, config.g_hidden, config.g_layers);
  p.generator.head_w = Tensor({config.g_hidden, config.features});
  p.generator.head_b = Tensor({config.features});
  p.discriminator.features = config.features;
  p.discriminator.lstm = make_stack(config.features, config.d_hidden, config.d_layers);
  p.discriminator.head_w = Tensor({config.d_hidden, 1});
  p.discriminator.head_b = Tensor({1});
  return p;
}

NetworkParams init_params(const NetConfig& config, std::uint64_t seed) {
  NetworkParams p = zero_params(config);
  std::mt19937_64 rng(seed);
  init_stack(p.generator.lstm, rng);
  glorot(p.generator.head_w, rng);
  init_stack(p.discriminator.lstm, rng);
  glorot(p.discriminator.head_w, rng);
  return p;
}

Var generator_forward(Graph& g, const GeneratorNet& net, Var z) { return generator_impl(g, net, z); }

Var generator_forward_train(Graph& g, GeneratorNet& net, Var z) { return generator_impl(g, net, z); }

Tensor generate(const GeneratorNet& net, const Tensor& z) {
  Graph g;
  return generator_forward(g, net, g.input(z)).value();
}

Var discriminator_forward(Graph& g, const DiscriminatorNet& net, Var x) {
  return discriminator_impl(g, net, x);
}

Var discriminator_forward_train(Graph& g, DiscriminatorNet& net, Var x) {
  return discriminator_impl(g, net, x);
}

std::vector<double> discriminate(const DiscriminatorNet& net, const Tensor& x) {
  Graph g;
  auto v = discriminator_forward(g, net, g.input(x)).value().data();
  return {v.begin(), v.end()};
}

namespace {

void list_stack(std::vector<std::pair<std::string, Tensor*>>& out, const std::string& prefix,
                std::vector<LstmLayer>& stack) {
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const std::string p = prefix + ".lstm" + std::to_string(i);
    out.emplace_back(p + ".w", &stack[i].w);
    out.emplace_back(p + ".u", &stack[i].u);
    out.emplace_back(p + ".b", &stack[i].b);
  }
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> named_tensors(GeneratorNet& net) {
  std::vector<std::pair<std::string, Tensor*>> out;
  list_stack(out, "g", net.lstm);
  out.emplace_back("g.head.w", &net.head_w);
  out.emplace_back("g.head.b", &net.head_b);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> named_tensors(DiscriminatorNet& net) {
  std::vector<std::pair<std::string, Tensor*>> out;
  list_stack(out, "d", net.lstm);
  out.emplace_back("d.head.w", &net.head_w);
  out.emplace_back("d.head.b", &net.head_b);
  return out;
}

std::vector<std::pair<std::string, Tensor*>> named_tensors(NetworkParams& params) {
  auto out = named_tensors(params.generator);
  auto d = named_tensors(params.discriminator);
  out.insert(out.end(), d.begin(), d.end());
  return out;
}

}  // namespace mimgan
