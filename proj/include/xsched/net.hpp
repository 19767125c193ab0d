#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xsched/common.hpp"

namespace xsched {

enum class Activation { kRelu, kTanh, kIdentity };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  throw std::invalid_argument("unknown activation");
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

inline double apply_activation(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

// Subgradient at the ReLU kink is taken as 0.
inline double activation_derivative(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

// One dense layer: y = act(W x + b), W row-major with `rows` outputs and
// `cols` inputs.
struct Layer {
  int rows = 0;
  int cols = 0;
  std::vector<double> w;  // rows * cols, row-major
  std::vector<double> b;  // rows
  Activation activation = Activation::kIdentity;
};

struct PolicyNetwork {
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().cols; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().rows; }

  void validate() const {
    if (layers.empty()) {
      throw std::invalid_argument("network has no layers");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Layer& layer = layers[i];
      if (layer.rows <= 0 || layer.cols <= 0) {
        throw std::invalid_argument("layer " + std::to_string(i) +
                                    ": nonpositive dimensions");
      }
      if (layer.w.size() != static_cast<std::size_t>(layer.rows) * layer.cols ||
          layer.b.size() != static_cast<std::size_t>(layer.rows)) {
        throw std::invalid_argument("layer " + std::to_string(i) +
                                    ": parameter size mismatch");
      }
      if (i > 0 && layer.cols != layers[i - 1].rows) {
        throw std::invalid_argument(
            "layer " + std::to_string(i) + ": expected input dim " +
            std::to_string(layers[i - 1].rows) + ", found " +
            std::to_string(layer.cols));
      }
      for (double v : layer.w) {
        if (!std::isfinite(v)) {
          throw std::invalid_argument("layer " + std::to_string(i) +
                                      ": non-finite weight");
        }
      }
      for (double v : layer.b) {
        if (!std::isfinite(v)) {
          throw std::invalid_argument("layer " + std::to_string(i) +
                                      ": non-finite bias");
        }
      }
    }
    if (layers.back().activation != Activation::kIdentity) {
      throw std::invalid_argument("final layer must emit raw logits");
    }
  }
};

// Pre-activations and activations per layer; layer_inputs[i] feeds layers[i].
struct ForwardCache {
  std::vector<std::vector<double>> pre;   // per layer, size rows
  std::vector<std::vector<double>> post;  // per layer, size rows
};

inline std::vector<double> forward_cached(const PolicyNetwork& net,
                                          std::span<const double> input,
                                          ForwardCache* cache) {
  if (static_cast<int>(input.size()) != net.input_dim()) {
    throw std::invalid_argument("forward: input dim " +
                                std::to_string(input.size()) + ", expected " +
                                std::to_string(net.input_dim()));
  }
  std::vector<double> current(input.begin(), input.end());
  if (cache) {
    cache->pre.clear();
    cache->post.clear();
  }
  for (const Layer& layer : net.layers) {
    std::vector<double> z(layer.rows, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double* wrow = layer.w.data() + static_cast<std::size_t>(r) * layer.cols;
      double acc = layer.b[r];
      for (int c = 0; c < layer.cols; ++c) acc += wrow[c] * current[c];
      z[r] = acc;
    }
    std::vector<double> a(layer.rows);
    for (int r = 0; r < layer.rows; ++r) {
      a[r] = apply_activation(layer.activation, z[r]);
    }
    if (cache) {
      cache->pre.push_back(z);
      cache->post.push_back(a);
    }
    current = std::move(a);
  }
  return current;
}

inline std::vector<double> forward(const PolicyNetwork& net,
                                   std::span<const double> input) {
  return forward_cached(net, input, nullptr);
}

// Exact reverse-mode gradient of logit `action_index` with respect to the
// input vector.
inline std::vector<double> grad_input(const PolicyNetwork& net,
                                      std::span<const double> input,
                                      int action_index) {
  if (action_index < 0 || action_index >= net.output_dim()) {
    throw std::domain_error("grad_input: action index out of range");
  }
  ForwardCache cache;
  forward_cached(net, input, &cache);

  std::vector<double> grad(net.output_dim(), 0.0);
  grad[action_index] = 1.0;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Layer& layer = net.layers[i];
    // through the activation
    for (int r = 0; r < layer.rows; ++r) {
      grad[r] *= activation_derivative(layer.activation, cache.pre[i][r]);
    }
    // through the linear map
    std::vector<double> prev(layer.cols, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double g = grad[r];
      if (g == 0.0) continue;
      const double* wrow = layer.w.data() + static_cast<std::size_t>(r) * layer.cols;
      for (int c = 0; c < layer.cols; ++c) prev[c] += g * wrow[c];
    }
    grad = std::move(prev);
  }
  return grad;
}

// Parameter-shaped gradient buffers for training.
struct ParamGrad {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  static ParamGrad zeros_like(const PolicyNetwork& net) {
    ParamGrad g;
    for (const Layer& layer : net.layers) {
      g.w.emplace_back(layer.w.size(), 0.0);
      g.b.emplace_back(layer.b.size(), 0.0);
    }
    return g;
  }
};

// Accumulate d(output . dlogits)/d(params) into `grad` given a cached
// forward pass; returns nothing. `dlogits` is the adjoint at the output.
inline void accumulate_param_grad(const PolicyNetwork& net,
                                  std::span<const double> input,
                                  const ForwardCache& cache,
                                  std::vector<double> dlogits,
                                  double scale, ParamGrad& grad) {
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Layer& layer = net.layers[i];
    for (int r = 0; r < layer.rows; ++r) {
      dlogits[r] *= activation_derivative(layer.activation, cache.pre[i][r]);
    }
    const double* layer_input =
        i == 0 ? input.data() : cache.post[i - 1].data();
    for (int r = 0; r < layer.rows; ++r) {
      const double g = dlogits[r] * scale;
      grad.b[i][r] += g;
      if (g == 0.0) continue;
      double* wrow = grad.w[i].data() + static_cast<std::size_t>(r) * layer.cols;
      for (int c = 0; c < layer.cols; ++c) wrow[c] += g * layer_input[c];
    }
    if (i == 0) break;
    std::vector<double> prev(layer.cols, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double g = dlogits[r];
      if (g == 0.0) continue;
      const double* wrow = layer.w.data() + static_cast<std::size_t>(r) * layer.cols;
      for (int c = 0; c < layer.cols; ++c) prev[c] += g * wrow[c];
    }
    dlogits = std::move(prev);
  }
}

inline std::vector<double> softmax(std::span<const double> logits,
                                   double temperature = 1.0) {
  if (temperature <= 0.0) {
    throw std::domain_error("softmax: temperature must be positive");
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double v : logits) max_logit = std::max(max_logit, v);
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - max_logit) / temperature);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

// Greedy argmax with lowest-index tie-break.
inline int select_action_greedy(std::span<const double> logits) {
  if (logits.empty()) throw std::domain_error("select_action: no logits");
  int best = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) {
      throw std::runtime_error("select_action: non-finite logit");
    }
    if (logits[i] > logits[best]) best = static_cast<int>(i);
  }
  return best;
}

// Reproducible softmax sample at the given temperature.
inline int select_action_softmax(std::span<const double> logits, Rng& rng,
                                 double temperature = 1.0) {
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("select_action: non-finite logit");
    }
  }
  const std::vector<double> probs = softmax(logits, temperature);
  const double u = rng.next_double();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

// ---- construction and io ----

inline PolicyNetwork make_policy_network(
    std::uint64_t seed, int input_dim = kObservationDim,
    const std::vector<int>& hidden = {64, 64}, int output_dim = kNumActions,
    Activation hidden_activation = Activation::kTanh) {
  Rng rng(mix64(seed) ^ 0x5eedf00dULL);
  PolicyNetwork net;
  int in = input_dim;
  std::vector<int> dims = hidden;
  dims.push_back(output_dim);
  for (std::size_t i = 0; i < dims.size(); ++i) {
    Layer layer;
    layer.rows = dims[i];
    layer.cols = in;
    layer.activation =
        i + 1 == dims.size() ? Activation::kIdentity : hidden_activation;
    const double bound = std::sqrt(6.0 / (layer.rows + layer.cols));
    layer.w.resize(static_cast<std::size_t>(layer.rows) * layer.cols);
    for (double& v : layer.w) v = rng.next_uniform(-bound, bound);
    layer.b.assign(layer.rows, 0.0);
    net.layers.push_back(std::move(layer));
    in = dims[i];
  }
  net.validate();
  return net;
}

// Self-describing weight document:
//   {"layers":[{"activation":"tanh","rows":R,"cols":C,
//               "w":[... R*C row-major ...],"b":[... R ...]}, ...]}
inline nlohmann::json weights_to_json(const PolicyNetwork& net) {
  nlohmann::json j;
  j["layers"] = nlohmann::json::array();
  for (const Layer& layer : net.layers) {
    nlohmann::json jl;
    jl["activation"] = activation_name(layer.activation);
    jl["rows"] = layer.rows;
    jl["cols"] = layer.cols;
    jl["w"] = layer.w;
    jl["b"] = layer.b;
    j["layers"].push_back(std::move(jl));
  }
  return j;
}

inline void save_weights(const PolicyNetwork& net, const std::string& path) {
  net.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << weights_to_json(net).dump(2) << '\n';
}

inline PolicyNetwork weights_from_json(const nlohmann::json& j) {
  PolicyNetwork net;
  try {
    for (const auto& jl : j.at("layers")) {
      Layer layer;
      layer.activation = activation_from_name(jl.at("activation").get<std::string>());
      layer.rows = jl.at("rows").get<int>();
      layer.cols = jl.at("cols").get<int>();
      layer.w = jl.at("w").get<std::vector<double>>();
      layer.b = jl.at("b").get<std::vector<double>>();
      net.layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("weight file: ") + e.what());
  }
  net.validate();
  return net;
}

inline PolicyNetwork load_weights(const std::string& path,
                                  int expected_input_dim = -1,
                                  int expected_output_dim = -1) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open weight file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("weight file " + path + ": " + e.what());
  }
  PolicyNetwork net = weights_from_json(j);
  if (expected_input_dim >= 0 && net.input_dim() != expected_input_dim) {
    throw std::invalid_argument(
        "weight file " + path + ": input dim " +
        std::to_string(net.input_dim()) + ", expected " +
        std::to_string(expected_input_dim));
  }
  if (expected_output_dim >= 0 && net.output_dim() != expected_output_dim) {
    throw std::invalid_argument(
        "weight file " + path + ": output dim " +
        std::to_string(net.output_dim()) + ", expected " +
        std::to_string(expected_output_dim));
  }
  return net;
}

}  // namespace xsched
