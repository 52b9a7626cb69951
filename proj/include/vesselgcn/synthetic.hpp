// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_SYNTHETIC_HPP
#define VESSELGCN_SYNTHETIC_HPP

// Synthetic vessel-like graphs with labels that are a deterministic function
// of geometry and topology.
//
// Each graph is a set of branching trees, one per octant "territory", whose
// roots are chained and sometimes closed into a ring. Node class =
// (octant * 3 + degree bucket) mod 21.
// Coordinates avoid a band of half-width kOctantMargin around 0.5, so rigid
// translations up to that size never move a node across an octant boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vesselgcn/graph.hpp"
#include "vesselgcn/io.hpp"
#include "vesselgcn/random.hpp"

namespace vesselgcn {

inline constexpr double kOctantMargin = 0.12;

struct SynthConfig {
  int train_graphs = 20;
  int val_graphs = 5;
  int test_graphs = 5;
  int min_nodes = 12;
  int max_nodes = 24;
  /// Fraction of nodes whose label is replaced by a random class.
  double noise = 0.0;
  /// Chance of closing the ring of territory roots, and separately of adding
  /// a chord across it.
  double cross_edge_probability = 0.5;
  int edge_class_count = 8;
  Vec3 extents{256.0, 256.0, 160.0};
  std::uint64_t seed = 1;

  void validate() const {
    if (train_graphs < 1 || val_graphs < 1 || test_graphs < 1) {
      throw ValidationError("SynthConfig: graph counts must be >= 1");
    }
    if (min_nodes < 2) throw ValidationError("SynthConfig: min_nodes must be >= 2");
    if (max_nodes < min_nodes) throw ValidationError("SynthConfig: max_nodes < min_nodes");
    if (!(noise >= 0.0 && noise <= 1.0)) throw ValidationError("SynthConfig: noise must be in [0,1]");
    if (!(cross_edge_probability >= 0.0 && cross_edge_probability <= 1.0)) {
      throw ValidationError("SynthConfig: cross_edge_probability must be in [0,1]");
    }
    if (edge_class_count < 1) throw ValidationError("SynthConfig: edge_class_count must be >= 1");
    for (double e : extents)
      if (!(e > 0.0)) throw ValidationError("SynthConfig: extents must be positive");
  }
};

/// 0 = ending, 1 = pass-through, 2 = bifurcation or higher.
inline int degree_bucket(std::size_t degree) { return degree <= 1 ? 0 : degree == 2 ? 1 : 2; }

inline int octant(const Vec3& normalized_position) {
  return (normalized_position[0] >= 0.5 ? 1 : 0) + (normalized_position[1] >= 0.5 ? 2 : 0) +
         (normalized_position[2] >= 0.5 ? 4 : 0);
}

/// The labeling rule every noise-free synthetic node obeys.
inline int geometric_label(const Vec3& normalized_position, std::size_t degree) {
  return (octant(normalized_position) * 3 + degree_bucket(degree)) % kNodeClassCount;
}

inline int edge_label_from_endpoints(int sender_label, int receiver_label, int edge_class_count) {
  return (sender_label * 7 + receiver_label * 13) % edge_class_count;
}

/// Circle-of-Willis stand-in: bifurcation classes of the first seven octants.
inline std::set<int> synthetic_cow_classes() { return {2, 5, 8, 11, 14, 17, 20}; }

inline std::vector<std::size_t> node_degrees(const VesselGraph& g) {
  std::vector<std::size_t> deg(g.node_count(), 0);
  for (const auto& e : g.edges) {
    ++deg[e.sender];
    ++deg[e.receiver];
  }
  return deg;
}

/// Builds one labeled graph. Positions are stored in image coordinates
/// (normalized position times extents); all other geometry is in
/// normalized units.
inline VesselGraph synthesize_graph(Rng& rng, const SynthConfig& config, std::string scan_id) {
  const auto span = static_cast<std::size_t>(config.max_nodes - config.min_nodes + 1);
  const std::size_t n = static_cast<std::size_t>(config.min_nodes) + rng.index(span);

  // Nodes are spread over a few octant territories. Each territory is a
  // branching tree grown from a root in the middle of its octant; only the
  // links between roots cross an octant boundary, which keeps neighborhoods
  // mostly label-consistent. Work happens in "inset" coordinates u, the
  // distance from the outer face of the octant, mirrored into place later.
  const std::size_t territory_count = std::clamp<std::size_t>(n / 6, 1, 8);
  std::vector<int> octants{0, 1, 2, 3, 4, 5, 6, 7};
  rng.shuffle(std::span<int>(octants));
  const double inner = 0.5 - kOctantMargin;

  std::vector<Vec3> inset;
  std::vector<std::size_t> territory, depth;
  std::vector<std::pair<std::size_t, std::size_t>> links;
  auto add_node = [&](const Vec3& u, std::size_t t, std::size_t d) {
    inset.push_back(u);
    territory.push_back(t);
    depth.push_back(d);
    return inset.size() - 1;
  };
  for (std::size_t t = 0; t < territory_count; ++t) {
    const double mid = 0.5 * (0.04 + inner);
    add_node({mid + rng.uniform(-0.04, 0.04), mid + rng.uniform(-0.04, 0.04),
              mid + rng.uniform(-0.04, 0.04)},
             t, 0);
    if (t > 0) links.emplace_back(t - 1, t);
  }
  auto grow = [&](std::size_t parent) {
    Vec3 u = inset[parent];
    while (u == inset[parent]) {
      u = inset[parent];
      for (double& x : u) x = std::clamp(x + rng.uniform(-0.08, 0.08), 0.04, inner);
    }
    links.emplace_back(parent, inset.size());
    return add_node(u, territory[parent], depth[parent] + 1);
  };
  // Frontier of nodes that may still branch, expanded in random order. Every
  // expansion is a bifurcation except a final single step when one node is
  // left to place.
  std::vector<std::size_t> frontier(territory_count);
  for (std::size_t t = 0; t < territory_count; ++t) frontier[t] = t;
  while (inset.size() < n) {
    const std::size_t pick = rng.index(frontier.size());
    const std::size_t parent = frontier[pick];
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
    frontier.push_back(grow(parent));
    if (inset.size() < n) frontier.push_back(grow(parent));
  }

  std::vector<Vec3> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int o = octants[territory[i]];
    for (int c = 0; c < 3; ++c) pos[i][c] = (o >> c) & 1 ? 1.0 - inset[i][c] : inset[i][c];
  }
  auto dist = [&](std::size_t a, std::size_t b) {
    const Vec3 d{pos[b][0] - pos[a][0], pos[b][1] - pos[a][1], pos[b][2] - pos[a][2]};
    return norm(d);
  };

  // Circle-of-Willis stand-in: the chain of territory roots may be closed
  // into a ring, and a second chance adds a chord across it.
  if (territory_count >= 3 && rng.bernoulli(config.cross_edge_probability)) {
    links.emplace_back(0, territory_count - 1);
  }
  if (territory_count >= 4 && rng.bernoulli(config.cross_edge_probability)) {
    const std::size_t a = rng.index(territory_count - 2);
    links.emplace_back(a, a + 2);
  }

  VesselGraph g;
  g.meta.scan_id = std::move(scan_id);
  g.meta.extents = config.extents;
  g.nodes.resize(n);
  std::vector<std::size_t> deg(n, 0);
  for (const auto& [s, r] : links) {
    ++deg[s];
    ++deg[r];
  }
  // Calibre shrinks with depth, tapers at endings and swells at branch points.
  for (std::size_t i = 0; i < n; ++i) {
    static constexpr double kBucketCalibre[3] = {0.6, 1.0, 1.5};
    g.nodes[i].radius = 0.02 * std::pow(0.85, static_cast<double>(depth[i])) *
                        kBucketCalibre[degree_bucket(deg[i])] * rng.uniform(0.9, 1.1);
  }
  for (const auto& [s, r] : links) {
    EdgeRecord e;
    e.sender = s;
    e.receiver = r;
    e.distance = dist(s, r);
    for (int c = 0; c < 3; ++c) e.direction[c] = (pos[r][c] - pos[s][c]) / e.distance;
    e.mean_radius = 0.5 * (g.nodes[s].radius + g.nodes[r].radius);
    g.edges.push_back(e);
  }

  // Tangent: signed sum of incident edge directions.
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 t{0.0, 0.0, 0.0};
    for (const auto& e : g.edges) {
      if (e.sender != i && e.receiver != i) continue;
      for (int c = 0; c < 3; ++c) t[c] += e.direction[c];
    }
    const double len = norm(t);
    if (len > 1e-9) {
      for (double& c : t) c /= len;
    } else {
      t = {0.0, 0.0, 0.0};
    }
    g.nodes[i].direction_embedding = t;
  }

  for (std::size_t i = 0; i < n; ++i) {
    int label = geometric_label(pos[i], deg[i]);
    if (config.noise > 0.0 && rng.bernoulli(config.noise)) {
      label = static_cast<int>(rng.index(kNodeClassCount));
    }
    g.nodes[i].label = label;
    for (int c = 0; c < 3; ++c) g.nodes[i].position[c] = pos[i][c] * config.extents[c];
  }
  for (auto& e : g.edges) {
    e.label = edge_label_from_endpoints(*g.nodes[e.sender].label, *g.nodes[e.receiver].label,
                                        config.edge_class_count);
  }
  return g;
}

struct SyntheticDataset {
  DatasetManifest manifest;
  std::vector<VesselGraph> train;
  std::vector<VesselGraph> val;
  std::vector<VesselGraph> test;
};

inline std::string split_scan_id(const char* split, int i) {
  std::string num = std::to_string(i);
  return std::string(split) + "_" + std::string(num.size() < 3 ? 3 - num.size() : 0, '0') + num;
}

/// Generates all three splits in memory. The manifest's paths point at
/// "graphs/<scan_id>.json".
inline SyntheticDataset synthesize_dataset(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  SyntheticDataset d;
  auto fill = [&](const char* split, int count, std::vector<VesselGraph>& graphs,
                  std::vector<std::string>& paths) {
    for (int i = 0; i < count; ++i) {
      graphs.push_back(synthesize_graph(rng, config, split_scan_id(split, i)));
      paths.push_back("graphs/" + graphs.back().meta.scan_id + ".json");
    }
  };
  fill("train", config.train_graphs, d.train, d.manifest.train);
  fill("val", config.val_graphs, d.val, d.manifest.val);
  fill("test", config.test_graphs, d.test, d.manifest.test);
  for (int c = 0; c < kNodeClassCount; ++c) {
    d.manifest.node_classes.push_back("octant" + std::to_string(c / 3) + "_" +
                                      (c % 3 == 0 ? "ending" : c % 3 == 1 ? "segment" : "bifurcation"));
  }
  for (int c = 0; c < config.edge_class_count; ++c) {
    d.manifest.edge_classes.push_back("edge_" + std::to_string(c));
  }
  d.manifest.cow_class_ids = synthetic_cow_classes();
  return d;
}

/// Writes manifest.json and graphs/ under `out_dir`.
inline DatasetManifest generate_synthetic(const SynthConfig& config,
                                          const std::filesystem::path& out_dir) {
  SyntheticDataset d = synthesize_dataset(config);
  for (const auto* split : {&d.train, &d.val, &d.test}) {
    for (const auto& g : *split) save_graph(g, out_dir / "graphs" / (g.meta.scan_id + ".json"));
  }
  write_text_file(out_dir / "manifest.json", manifest_to_json(d.manifest).dump(2) + "\n");
  return d.manifest;
}

inline SynthConfig synth_config_from_json(const Json& j, const std::string& file) {
  const detail::Reader rd(file);
  if (!j.is_object()) rd.fail("", "expected an object");
  SynthConfig c;
  detail::optional_field(j, "train_graphs", c.train_graphs, rd);
  detail::optional_field(j, "val_graphs", c.val_graphs, rd);
  detail::optional_field(j, "test_graphs", c.test_graphs, rd);
  detail::optional_field(j, "min_nodes", c.min_nodes, rd);
  detail::optional_field(j, "max_nodes", c.max_nodes, rd);
  detail::optional_field(j, "noise", c.noise, rd);
  detail::optional_field(j, "cross_edge_probability", c.cross_edge_probability, rd);
  detail::optional_field(j, "edge_class_count", c.edge_class_count, rd);
  if (auto it = j.find("extents"); it != j.end()) c.extents = rd.vec3(*it, "/extents");
  detail::optional_field(j, "seed", c.seed, rd);
  c.validate();
  return c;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_SYNTHETIC_HPP
