// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_GRADCHECK_HPP
#define VESSELGCN_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vesselgcn/autodiff.hpp"
#include "vesselgcn/graph.hpp"
#include "vesselgcn/model.hpp"
#include "vesselgcn/random.hpp"
#include "vesselgcn/training.hpp"

namespace vesselgcn {

/// Random connected labeled graph with `node_count` nodes and `edge_count`
/// edges (a random spanning tree plus extra non-parallel edges). Positions
/// are already normalized.
inline VesselGraph random_labeled_graph(std::uint64_t seed, std::size_t node_count,
                                        std::size_t edge_count, int edge_class_count) {
  const std::size_t max_edges = node_count * (node_count - 1) / 2;
  if (node_count < 2 || edge_count + 1 < node_count || edge_count > max_edges) {
    throw ValidationError("random_labeled_graph: cannot build a connected simple graph with " +
                          std::to_string(node_count) + " nodes and " +
                          std::to_string(edge_count) + " edges");
  }
  Rng rng(seed);
  VesselGraph g;
  g.meta.scan_id = "random_" + std::to_string(seed);
  g.nodes.resize(node_count);
  for (auto& v : g.nodes) {
    v.position = {rng.uniform(), rng.uniform(), rng.uniform()};
    v.radius = rng.uniform(0.001, 0.02);
    Vec3 d{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    const double len = norm(d);
    for (double& c : d) c /= len;
    v.direction_embedding = d;
    v.label = static_cast<int>(rng.index(kNodeClassCount));
  }
  std::vector<std::vector<bool>> used(node_count, std::vector<bool>(node_count, false));
  auto link = [&](std::size_t s, std::size_t r) {
    EdgeRecord e;
    e.sender = s;
    e.receiver = r;
    Vec3 d;
    for (int c = 0; c < 3; ++c) d[c] = g.nodes[r].position[c] - g.nodes[s].position[c];
    e.distance = std::max(norm(d), 1e-6);
    if (norm(d) < 1e-12) d = {1.0, 0.0, 0.0};
    const double len = norm(d);
    for (double& c : d) c /= len;
    e.direction = d;
    e.mean_radius = 0.5 * (g.nodes[s].radius + g.nodes[r].radius);
    e.label = static_cast<int>(rng.index(static_cast<std::size_t>(edge_class_count)));
    used[s][r] = used[r][s] = true;
    g.edges.push_back(e);
  };
  for (std::size_t i = 1; i < node_count; ++i) link(rng.index(i), i);
  while (g.edges.size() < edge_count) {
    const std::size_t a = rng.index(node_count), b = rng.index(node_count);
    if (a != b && !used[a][b]) link(a, b);
  }
  return g;
}

struct ParameterCheck {
  std::string name;
  std::size_t scalars = 0;
  /// max over entries of |analytic - numeric| / max(1, |analytic|)
  double worst_relative_error = 0.0;
  double max_abs_gradient = 0.0;
};

/// Compares backward() with central differences for every named parameter
/// of the model's training loss on one graph.
inline std::vector<ParameterCheck> check_model_gradients(const VesselGraph& graph,
                                                         const ModelConfig& config,
                                                         std::uint64_t param_seed,
                                                         double h = 1e-6) {
  const PreparedGraph prepared = prepare_graph(graph, true, config.edge_class_count);
  const GraphFeatures features = extract_features(prepared.graph);
  const ModelParams params = init_params(config, param_seed);
  const GraphGradient analytic = graph_gradient(prepared, features, params, config);
  const auto numeric = finite_difference_gradient(
      [&](const ModelParams& p) { return graph_loss(prepared, features, p, config); }, params, h);

  std::vector<ParameterCheck> out;
  params.for_each([&](const std::string& name, const Matrix& m) {
    const Matrix& a = analytic.grads.at(name);
    const Matrix& n = numeric.at(name);
    ParameterCheck c{name, m.size(), 0.0, 0.0};
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double ai = a.data()[i];
      const double err = std::abs(ai - n.data()[i]) / std::max(1.0, std::abs(ai));
      c.worst_relative_error = std::max(c.worst_relative_error, err);
      c.max_abs_gradient = std::max(c.max_abs_gradient, std::abs(ai));
    }
    out.push_back(c);
  });
  return out;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_GRADCHECK_HPP
