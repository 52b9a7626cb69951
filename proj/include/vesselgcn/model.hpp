// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_MODEL_HPP
#define VESSELGCN_MODEL_HPP

// Encoder-core-decoder graph convolutional network over a node graph and its
// line graph.
//
// Every layer computes  X' = sigmoid(A * X * W)  on the edge side first, then
// on the node side with the node input widened by the mean of the freshly
// updated incident-edge features. Intermediate layer outputs are fused by
// column concatenation; in the encoder each output is first average-pooled
// along the feature axis. The core is iterated for a fixed number of
// message-passing rounds with tied weights, each round seeing the encoder
// output next to its own previous output.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vesselgcn/autodiff.hpp"
#include "vesselgcn/graph.hpp"
#include "vesselgcn/matrix.hpp"
#include "vesselgcn/random.hpp"

namespace vesselgcn {

/// pos(3) radius dir(3) constant
inline constexpr std::size_t kNodeFeatureWidth = 8;
/// dir(3) dist mean_radius constant
inline constexpr std::size_t kEdgeFeatureWidth = 6;

// Normalized positions are centred and stretched onto [-4, 4], roughly the
// range where the logistic is not saturated.
inline constexpr double kPositionFeatureScale = 8.0;

// Glorot's recommended scaling for logistic units: the uniform bound is
// four times the tanh value. Without it the deep sigmoid stack starts almost
// linear and trains very slowly at lr 1e-3.
inline constexpr double kInitGain = 4.0;

struct ModelConfig {
  int encoder_depth = 2;
  int core_depth = 2;
  int decoder_depth = 2;
  int hidden_width = 32;
  int pool_kernel = 2;
  int message_passing_rounds = 10;
  bool pooling_enabled = true;
  int edge_class_count = 8;
  std::uint64_t seed = 0;

  void validate() const {
    if (encoder_depth < 1 || core_depth < 1 || decoder_depth < 1) {
      throw ValidationError("ModelConfig: depths must be >= 1");
    }
    if (message_passing_rounds < 1) throw ValidationError("ModelConfig: rounds must be >= 1");
    if (hidden_width < 1) throw ValidationError("ModelConfig: hidden_width must be >= 1");
    if (pool_kernel < 1) throw ValidationError("ModelConfig: pool_kernel must be >= 1");
    if (edge_class_count < 1) throw ValidationError("ModelConfig: edge_class_count must be >= 1");
  }

  /// Width of one pooled (or unpooled) encoder layer output.
  std::size_t encoder_part_width() const {
    const auto h = static_cast<std::size_t>(hidden_width);
    const auto k = static_cast<std::size_t>(pool_kernel);
    return pooling_enabled ? (h + k - 1) / k : h;
  }
  std::size_t encoder_fused_width() const {
    return static_cast<std::size_t>(encoder_depth) * encoder_part_width();
  }
  std::size_t decoder_fused_width() const {
    return static_cast<std::size_t>(decoder_depth * hidden_width);
  }

  bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
  Matrix w_edge;  // D_e x M
  Matrix w_node;  // (D_n + M) x M

  static LayerParams zeros(std::size_t in_node, std::size_t in_edge, std::size_t out) {
    return {Matrix(in_edge, out), Matrix(in_node + out, out)};
  }
  bool operator==(const LayerParams&) const = default;
};

/// All learnable matrices. Names follow "<component>.<index>.W_edge" etc.
struct ModelParams {
  std::vector<LayerParams> encoder;
  std::vector<LayerParams> core;
  LayerParams core_projection;
  std::vector<LayerParams> decoder;
  Matrix node_head;
  Matrix edge_head;

  /// All-zero parameters with the shapes implied by `config`.
  static ModelParams zeros(const ModelConfig& config) {
    config.validate();
    const auto h = static_cast<std::size_t>(config.hidden_width);
    const std::size_t fused = config.encoder_fused_width();
    ModelParams p;
    for (int i = 0; i < config.encoder_depth; ++i) {
      p.encoder.push_back(i == 0 ? LayerParams::zeros(kNodeFeatureWidth, kEdgeFeatureWidth, h)
                                 : LayerParams::zeros(h, h, h));
    }
    for (int i = 0; i < config.core_depth; ++i) {
      p.core.push_back(i == 0 ? LayerParams::zeros(2 * fused, 2 * fused, h)
                              : LayerParams::zeros(h, h, h));
    }
    const std::size_t core_cat = static_cast<std::size_t>(config.core_depth) * h;
    p.core_projection = LayerParams::zeros(core_cat, core_cat, fused);
    for (int i = 0; i < config.decoder_depth; ++i) {
      p.decoder.push_back(i == 0 ? LayerParams::zeros(fused, fused, h)
                                 : LayerParams::zeros(h, h, h));
    }
    p.node_head = Matrix(config.decoder_fused_width(), kNodeClassCount);
    p.edge_head = Matrix(config.decoder_fused_width(),
                         static_cast<std::size_t>(config.edge_class_count));
    return p;
  }

  template <typename F>
  void for_each(F&& fn) {
    visit(*this, fn);
  }
  template <typename F>
  void for_each(F&& fn) const {
    visit(*this, fn);
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
  }

  bool operator==(const ModelParams&) const = default;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& fn) {
    auto layers = [&](auto& list, const std::string& prefix) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        fn(base + ".W_edge", list[i].w_edge);
        fn(base + ".W_node", list[i].w_node);
      }
    };
    layers(self.encoder, "encoder");
    layers(self.core, "core");
    fn(std::string("core.proj.W_edge"), self.core_projection.w_edge);
    fn(std::string("core.proj.W_node"), self.core_projection.w_node);
    layers(self.decoder, "decoder");
    fn(std::string("node_head"), self.node_head);
    fn(std::string("edge_head"), self.edge_head);
  }
};

/// Glorot-uniform initialization scaled by kInitGain, deterministic per seed.
inline ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  Rng rng(seed);
  p.for_each([&](const std::string&, Matrix& m) {
    const double bound = kInitGain * std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    for (double& v : m.data()) v = rng.uniform(-bound, bound);
  });
  return p;
}

/// Raw input features of one graph.
struct GraphFeatures {
  Matrix node;  // N x kNodeFeatureWidth
  Matrix edge;  // K x kEdgeFeatureWidth
};

inline GraphFeatures extract_features(const VesselGraph& g) {
  GraphFeatures f{Matrix(g.node_count(), kNodeFeatureWidth),
                  Matrix(g.edge_count(), kEdgeFeatureWidth)};
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const NodeRecord& v = g.nodes[i];
    auto row = f.node.row(i);
    for (int c = 0; c < 3; ++c) row[c] = kPositionFeatureScale * (v.position[c] - 0.5);
    row[3] = v.radius;
    row[4] = v.direction_embedding[0];
    row[5] = v.direction_embedding[1];
    row[6] = v.direction_embedding[2];
    row[7] = 1.0;
  }
  for (std::size_t k = 0; k < g.edge_count(); ++k) {
    const EdgeRecord& e = g.edges[k];
    auto row = f.edge.row(k);
    row[0] = e.direction[0];
    row[1] = e.direction[1];
    row[2] = e.direction[2];
    row[3] = e.distance;
    row[4] = e.mean_radius;
    row[5] = 1.0;
  }
  return f;
}

/// Graph operators recorded as tape constants.
struct TopologyVars {
  Var node_adjacency;
  Var edge_adjacency;
  /// 0.5 * (incidence_in + incidence_out): averages the two endpoints' view
  /// of each incident edge.
  Var edge_to_node;

  static TopologyVars record(Tape& tape, const GraphTopology& topo) {
    Matrix mix = topo.incidence_in;
    for (std::size_t i = 0; i < mix.size(); ++i) {
      mix.data()[i] = 0.5 * (mix.data()[i] + topo.incidence_out.data()[i]);
    }
    return TopologyVars{tape.constant(topo.node_adjacency), tape.constant(topo.edge_adjacency),
                        tape.constant(std::move(mix))};
  }
};

struct LayerVars {
  Var w_edge;
  Var w_node;
};

struct ParamVars {
  std::vector<LayerVars> encoder;
  std::vector<LayerVars> core;
  LayerVars core_projection;
  std::vector<LayerVars> decoder;
  Var node_head;
  Var edge_head;

  /// Registers every matrix of `p` as a named tape parameter.
  static ParamVars record(Tape& tape, const ModelParams& p) {
    auto layer = [&](const LayerParams& l, const std::string& base) {
      return LayerVars{tape.parameter(base + ".W_edge", l.w_edge),
                       tape.parameter(base + ".W_node", l.w_node)};
    };
    auto layers = [&](const std::vector<LayerParams>& list, const std::string& prefix) {
      std::vector<LayerVars> out;
      for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(layer(list[i], prefix + "." + std::to_string(i)));
      }
      return out;
    };
    auto enc = layers(p.encoder, "encoder");
    auto core = layers(p.core, "core");
    auto proj = layer(p.core_projection, "core.proj");
    auto dec = layers(p.decoder, "decoder");
    Var nh = tape.parameter("node_head", p.node_head);
    Var eh = tape.parameter("edge_head", p.edge_head);
    return ParamVars{std::move(enc), std::move(core), proj, std::move(dec), nh, eh};
  }
};

/// Node and edge feature pair flowing between components.
struct FeaturePair {
  Var node;
  Var edge;
};

namespace detail {
inline void expect_rows(const Var& m, std::size_t rows, const char* what) {
  if (m.rows() != rows) {
    throw ShapeError(std::string("gcn_layer: ") + what + " is " + m.value().shape() +
                     ", expected " + std::to_string(rows) + " rows");
  }
}

// A * X * W, associating so the N x N product runs on the narrower side.
inline Var propagate(const Var& a, const Var& x, const Var& w) {
  if (w.cols() <= w.rows()) return matmul(a, matmul(x, w));
  return matmul(matmul(a, x), w);
}
}  // namespace detail

/// One graph convolutional layer: the edge graph is updated first, then the
/// node graph sees the updated edges through the incidence average.
inline FeaturePair gcn_layer(const TopologyVars& topo, const FeaturePair& x,
                             const LayerVars& params) {
  const std::size_t n = topo.node_adjacency.rows();
  const std::size_t k = topo.edge_adjacency.rows();
  detail::expect_rows(x.node, n, "X_node");
  detail::expect_rows(x.edge, k, "X_edge");
  if (params.w_edge.rows() != x.edge.cols()) {
    throw ShapeError("gcn_layer: W_edge is " + params.w_edge.value().shape() +
                     " but X_edge is " + x.edge.value().shape());
  }
  const std::size_t m_edge = params.w_edge.cols();
  if (params.w_node.rows() != x.node.cols() + m_edge) {
    throw ShapeError("gcn_layer: W_node is " + params.w_node.value().shape() +
                     " but node input is " + x.node.value().shape() + " plus " +
                     std::to_string(m_edge) + " aggregated edge columns");
  }
  Var edge_out = sigmoid(detail::propagate(topo.edge_adjacency, x.edge, params.w_edge));
  Var aggregated = matmul(topo.edge_to_node, edge_out);
  Var node_in = concat_cols({x.node, aggregated});
  Var node_out = sigmoid(detail::propagate(topo.node_adjacency, node_in, params.w_node));
  return {node_out, edge_out};
}

namespace detail {
inline FeaturePair concat_pairs(const std::vector<FeaturePair>& parts) {
  std::vector<Var> nodes, edges;
  for (const auto& p : parts) {
    nodes.push_back(p.node);
    edges.push_back(p.edge);
  }
  return {concat_cols(nodes), concat_cols(edges)};
}

inline void expect_layers(std::size_t have, int want, const char* component) {
  if (have != static_cast<std::size_t>(want)) {
    throw ShapeError(std::string(component) + ": config asks for " + std::to_string(want) +
                     " layers, parameters hold " + std::to_string(have));
  }
}
}  // namespace detail

/// Stacked encoder layers; each output is average-pooled along the feature
/// axis (when enabled) and all of them are concatenated.
inline FeaturePair encoder_forward(const TopologyVars& topo, const FeaturePair& input,
                                   const std::vector<LayerVars>& layers,
                                   const ModelConfig& config) {
  detail::expect_layers(layers.size(), config.encoder_depth, "encoder");
  std::vector<FeaturePair> parts;
  FeaturePair x = input;
  for (const auto& layer : layers) {
    x = gcn_layer(topo, x, layer);
    if (config.pooling_enabled) {
      const auto k = static_cast<std::size_t>(config.pool_kernel);
      parts.push_back({avgpool_cols(x.node, k), avgpool_cols(x.edge, k)});
    } else {
      parts.push_back(x);
    }
  }
  return detail::concat_pairs(parts);
}

/// Observability hook for tests and diagnostics.
struct ForwardTrace {
  int core_rounds = 0;
};

/// Message passing: round one sees the encoder output twice, later rounds see
/// the encoder output next to the previous round's output. Each round fuses
/// its stacked layers by concatenation and projects back to the encoder width.
inline FeaturePair core_forward(const TopologyVars& topo, const FeaturePair& encoded,
                                const std::vector<LayerVars>& layers,
                                const LayerVars& projection, const ModelConfig& config,
                                ForwardTrace* trace = nullptr) {
  detail::expect_layers(layers.size(), config.core_depth, "core");
  if (projection.w_edge.cols() != encoded.edge.cols() ||
      projection.w_node.cols() != encoded.node.cols()) {
    throw ShapeError("core: projection width " + std::to_string(projection.w_node.cols()) +
                     " does not close over encoder width " +
                     std::to_string(encoded.node.cols()));
  }
  FeaturePair previous = encoded;
  for (int round = 0; round < config.message_passing_rounds; ++round) {
    FeaturePair x{concat_cols({encoded.node, previous.node}),
                  concat_cols({encoded.edge, previous.edge})};
    std::vector<FeaturePair> parts;
    for (const auto& layer : layers) {
      x = gcn_layer(topo, x, layer);
      parts.push_back(x);
    }
    previous = gcn_layer(topo, detail::concat_pairs(parts), projection);
    if (trace) ++trace->core_rounds;
  }
  return previous;
}

/// Stacked decoder layers fused by plain concatenation.
inline FeaturePair decoder_forward(const TopologyVars& topo, const FeaturePair& core_out,
                                   const std::vector<LayerVars>& layers,
                                   const ModelConfig& config) {
  detail::expect_layers(layers.size(), config.decoder_depth, "decoder");
  std::vector<FeaturePair> parts;
  FeaturePair x = core_out;
  for (const auto& layer : layers) {
    x = gcn_layer(topo, x, layer);
    parts.push_back(x);
  }
  return detail::concat_pairs(parts);
}

struct ModelOutput {
  Var node_logits;  // N x 21
  Var edge_logits;  // K x edge_class_count
};

inline ModelOutput model_forward(Tape& tape, const GraphTopology& topology,
                                 const GraphFeatures& features, const ModelParams& params,
                                 const ModelConfig& config, ForwardTrace* trace = nullptr) {
  config.validate();
  const TopologyVars topo = TopologyVars::record(tape, topology);
  const ParamVars p = ParamVars::record(tape, params);
  const FeaturePair input{tape.constant(features.node), tape.constant(features.edge)};
  const FeaturePair encoded = encoder_forward(topo, input, p.encoder, config);
  const FeaturePair core = core_forward(topo, encoded, p.core, p.core_projection, config, trace);
  const FeaturePair decoded = decoder_forward(topo, core, p.decoder, config);
  return {matmul(decoded.node, p.node_head), matmul(decoded.edge, p.edge_head)};
}

/// Row-wise argmax, ties going to the lowest class index.
inline std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows(), 0);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

struct Prediction {
  std::vector<int> node_classes;
  std::vector<int> edge_classes;
};

/// Forward pass on a throwaway tape followed by argmax.
inline Prediction predict_labels(const GraphTopology& topology, const GraphFeatures& features,
                                 const ModelParams& params, const ModelConfig& config) {
  Tape tape;
  const ModelOutput out = model_forward(tape, topology, features, params, config);
  return {argmax_rows(out.node_logits.value()), argmax_rows(out.edge_logits.value())};
}

}  // namespace vesselgcn

#endif  // VESSELGCN_MODEL_HPP
