// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_GRAPH_HPP
#define VESSELGCN_GRAPH_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vesselgcn/matrix.hpp"
#include "vesselgcn/random.hpp"

namespace vesselgcn {

inline constexpr int kNodeClassCount = 21;

using Vec3 = std::array<double, 3>;

inline double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

/// Bifurcation or ending point of a vessel centerline.
struct NodeRecord {
  Vec3 position{};
  double radius = 0.0;
  /// Unit tangent at the node, or exactly zero for isolated nodes.
  Vec3 direction_embedding{};
  std::optional<int> label;

  bool operator==(const NodeRecord&) const = default;
};

/// Vessel segment from `sender` to `receiver`.
struct EdgeRecord {
  std::size_t sender = 0;
  std::size_t receiver = 0;
  Vec3 direction{};
  double distance = 0.0;
  double mean_radius = 0.0;
  std::optional<int> label;

  bool operator==(const EdgeRecord&) const = default;
};

struct GraphMeta {
  std::optional<Vec3> extents;
  std::string scan_id;

  bool operator==(const GraphMeta&) const = default;
};

struct VesselGraph {
  std::vector<NodeRecord> nodes;
  std::vector<EdgeRecord> edges;
  GraphMeta meta;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::size_t edge_count() const noexcept { return edges.size(); }
  bool operator==(const VesselGraph&) const = default;
};

/// Normalized operators for one graph. The edge side is the undirected line
/// graph: two edges are adjacent when they share an endpoint.
struct GraphTopology {
  Matrix node_adjacency;  // N x N
  Matrix edge_adjacency;  // K x K
  Matrix incidence_in;    // N x K, (i, k) = 1 iff node i receives edge k
  Matrix incidence_out;   // N x K, (i, k) = 1 iff node i sends edge k
};

inline constexpr double kUnitTolerance = 1e-9;

/// Checks every structural and range invariant of a graph. Throws
/// ValidationError naming the offending element. When `edge_class_count` is
/// given, edge labels are range-checked against it.
inline void validate_graph(const VesselGraph& g,
                           std::optional<int> edge_class_count = std::nullopt) {
  auto fail = [](const std::string& where, const std::string& what) {
    throw ValidationError(where + ": " + what);
  };
  const std::size_t n = g.nodes.size();
  if (n == 0) fail("nodes", "graph has no nodes");
  for (std::size_t i = 0; i < n; ++i) {
    const NodeRecord& v = g.nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    for (double c : v.position)
      if (!std::isfinite(c)) fail(where + ".pos", "non-finite coordinate");
    if (!std::isfinite(v.radius) || v.radius < 0.0) {
      fail(where + ".radius", "must be finite and >= 0, got " + std::to_string(v.radius));
    }
    const double dn = norm(v.direction_embedding);
    const bool zero = v.direction_embedding == Vec3{0.0, 0.0, 0.0};
    if (!zero && !(std::abs(dn - 1.0) <= kUnitTolerance)) {
      fail(where + ".dir", "must be unit length or exactly zero, norm " + std::to_string(dn));
    }
    if (v.label && (*v.label < 0 || *v.label >= kNodeClassCount)) {
      fail(where + ".label", "class " + std::to_string(*v.label) + " outside [0,21)");
    }
  }
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const EdgeRecord& e = g.edges[k];
    const std::string where = "edges[" + std::to_string(k) + "]";
    if (e.sender >= n) {
      fail(where + ".s", "sender index " + std::to_string(e.sender) + " out of bounds for " +
                             std::to_string(n) + " nodes");
    }
    if (e.receiver >= n) {
      fail(where + ".r", "receiver index " + std::to_string(e.receiver) +
                             " out of bounds for " + std::to_string(n) + " nodes");
    }
    if (e.sender == e.receiver) fail(where, "self-loop on node " + std::to_string(e.sender));
    if (!(std::abs(norm(e.direction) - 1.0) <= kUnitTolerance)) {
      fail(where + ".dir", "must be unit length");
    }
    if (!std::isfinite(e.distance) || e.distance <= 0.0) fail(where + ".dist", "must be > 0");
    if (!std::isfinite(e.mean_radius) || e.mean_radius < 0.0) {
      fail(where + ".mean_radius", "must be >= 0");
    }
    if (e.label && (*e.label < 0 || (edge_class_count && *e.label >= *edge_class_count))) {
      fail(where + ".label", "class " + std::to_string(*e.label) + " out of range");
    }
  }
}

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
inline Matrix normalize_adjacency(const Matrix& raw) {
  const std::size_t n = raw.rows();
  if (raw.cols() != n) throw ValidationError("normalize_adjacency: non-square " + raw.shape());
  for (std::size_t i = 0; i < n; ++i) {
    if (raw(i, i) != 0.0) throw ValidationError("normalize_adjacency: nonzero diagonal");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = raw(i, j);
      if (v != 0.0 && v != 1.0) throw ValidationError("normalize_adjacency: entries must be 0 or 1");
      if (v != raw(j, i)) throw ValidationError("normalize_adjacency: asymmetric input");
    }
  }
  std::vector<double> inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += raw(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double a = (i == j) ? 1.0 : raw(i, j);
      if (a != 0.0) out(i, j) = inv_sqrt_degree[i] * a * inv_sqrt_degree[j];
    }
  }
  return out;
}

inline GraphTopology build_topology(const VesselGraph& g) {
  const std::size_t n = g.nodes.size(), k = g.edges.size();
  if (n == 0) throw ValidationError("build_topology: graph has no nodes");
  Matrix node_raw(n, n);
  Matrix in(n, k), out(n, k);
  for (std::size_t e = 0; e < k; ++e) {
    const auto s = g.edges[e].sender, r = g.edges[e].receiver;
    if (s >= n || r >= n || s == r) {
      throw ValidationError("build_topology: invalid endpoints on edge " + std::to_string(e));
    }
    node_raw(s, r) = node_raw(r, s) = 1.0;
    out(s, e) = 1.0;
    in(r, e) = 1.0;
  }
  Matrix edge_raw(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    const auto& ea = g.edges[a];
    for (std::size_t b = a + 1; b < k; ++b) {
      const auto& eb = g.edges[b];
      const bool share = ea.sender == eb.sender || ea.sender == eb.receiver ||
                         ea.receiver == eb.sender || ea.receiver == eb.receiver;
      if (share) edge_raw(a, b) = edge_raw(b, a) = 1.0;
    }
  }
  return GraphTopology{normalize_adjacency(node_raw), normalize_adjacency(edge_raw),
                       std::move(in), std::move(out)};
}

/// Divides every node position by the image extents, mapping into [0,1].
inline VesselGraph normalize_positions(VesselGraph g, const Vec3& extents) {
  for (double e : extents) {
    if (!(e > 0.0) || !std::isfinite(e)) {
      throw ValidationError("normalize_positions: extents must be positive");
    }
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = g.nodes[i].position[c] / extents[c];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("normalize_positions: nodes[" + std::to_string(i) +
                              "] lies outside the image extents");
      }
      g.nodes[i].position[c] = v;
    }
  }
  return g;
}

/// Rigid random translation: one offset, each component uniform on
/// [-max_fraction, max_fraction], added to every node position.
inline VesselGraph augment_translate(VesselGraph g, std::uint64_t seed,
                                     double max_fraction = 0.10) {
  if (!(max_fraction >= 0.0)) {
    throw ValidationError("augment_translate: max_fraction must be >= 0");
  }
  if (max_fraction == 0.0) return g;
  Rng rng(seed);
  Vec3 offset;
  for (double& o : offset) o = rng.uniform(-max_fraction, max_fraction);
  for (auto& v : g.nodes)
    for (int c = 0; c < 3; ++c) v.position[c] += offset[c];
  return g;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_GRAPH_HPP
