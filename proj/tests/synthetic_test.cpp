// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "test_support.hpp"
#include "vesselgcn/synthetic.hpp"

namespace vesselgcn {
namespace {

bool connected(const VesselGraph& g) {
  std::vector<std::vector<std::size_t>> adj(g.node_count());
  for (const auto& e : g.edges) {
    adj[e.sender].push_back(e.receiver);
    adj[e.receiver].push_back(e.sender);
  }
  std::vector<bool> seen(g.node_count(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adj[v])
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
  }
  return reached == g.node_count();
}

std::vector<const VesselGraph*> all_graphs(const SyntheticDataset& d) {
  std::vector<const VesselGraph*> out;
  for (const auto* split : {&d.train, &d.val, &d.test})
    for (const auto& g : *split) out.push_back(&g);
  return out;
}

TEST(Synthetic, NoiseFreeLabelsFollowTheRule) {
  SynthConfig c;
  c.seed = 5;
  const SyntheticDataset d = synthesize_dataset(c);
  for (const VesselGraph* raw : all_graphs(d)) {
    const VesselGraph g = normalize_positions(*raw, *raw->meta.extents);
    const auto deg = node_degrees(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const Vec3& p = g.nodes[i].position;
      const int oct = (p[0] >= 0.5) + 2 * (p[1] >= 0.5) + 4 * (p[2] >= 0.5);
      const int bucket = deg[i] <= 1 ? 0 : deg[i] == 2 ? 1 : 2;
      EXPECT_EQ(*g.nodes[i].label, (oct * 3 + bucket) % 21);
    }
    for (const auto& e : g.edges) {
      const int want = (*g.nodes[e.sender].label * 7 + *g.nodes[e.receiver].label * 13) % 8;
      EXPECT_EQ(*e.label, want);
    }
  }
}

TEST(Synthetic, NoiseReplacesSomeLabels) {
  SynthConfig c;
  c.noise = 0.3;
  c.seed = 6;
  const SyntheticDataset d = synthesize_dataset(c);
  std::size_t total = 0, off = 0;
  for (const VesselGraph* raw : all_graphs(d)) {
    const VesselGraph g = normalize_positions(*raw, *raw->meta.extents);
    const auto deg = node_degrees(g);
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      ++total;
      off += *g.nodes[i].label != geometric_label(g.nodes[i].position, deg[i]);
    }
  }
  // Each replaced label keeps its value with chance 1/21.
  const double rate = static_cast<double>(off) / total;
  EXPECT_GT(rate, 0.15);
  EXPECT_LT(rate, 0.40);
}

TEST(Synthetic, SameSeedSameBytes) {
  testing::TempDir a, b;
  SynthConfig c;
  c.seed = 42;
  generate_synthetic(c, a.path());
  generate_synthetic(c, b.path());
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), a.path());
    EXPECT_EQ(read_text_file(entry.path()), read_text_file(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 31u);
  c.seed = 43;
  EXPECT_NE(dump_graph(synthesize_dataset(c).train[0]),
            read_text_file(a / "graphs/train_000.json"));
}

TEST(Synthetic, HundredSeedsAllValid) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthConfig c;
    c.seed = seed;
    c.train_graphs = 3;
    c.val_graphs = c.test_graphs = 1;
    c.min_nodes = 2 + static_cast<int>(seed % 13);
    c.max_nodes = c.min_nodes + static_cast<int>(seed % 17);
    c.edge_class_count = 1 + static_cast<int>(seed % 9);
    const SyntheticDataset d = synthesize_dataset(c);
    for (const VesselGraph* g : all_graphs(d)) {
      EXPECT_NO_THROW(validate_graph(*g, c.edge_class_count)) << "seed " << seed;
      EXPECT_NO_THROW(prepare_graph(*g, true, c.edge_class_count)) << "seed " << seed;
      EXPECT_GE(g->node_count(), static_cast<std::size_t>(c.min_nodes));
      EXPECT_LE(g->node_count(), static_cast<std::size_t>(c.max_nodes));
      EXPECT_TRUE(connected(*g)) << "seed " << seed;
      std::set<std::pair<std::size_t, std::size_t>> seen;
      for (const auto& e : g->edges) {
        EXPECT_TRUE(seen.insert(std::minmax(e.sender, e.receiver)).second) << "parallel edge";
      }
      // A spanning tree plus at most two extra links.
      EXPECT_GE(g->edge_count() + 1, g->node_count());
      EXPECT_LE(g->edge_count(), g->node_count() + 1);
    }
  }
}

TEST(Synthetic, ManifestDescribesDataset) {
  SynthConfig c;
  c.train_graphs = 2;
  c.val_graphs = 1;
  c.test_graphs = 3;
  c.edge_class_count = 5;
  const SyntheticDataset d = synthesize_dataset(c);
  EXPECT_EQ(d.manifest.train, (std::vector<std::string>{"graphs/train_000.json", "graphs/train_001.json"}));
  EXPECT_EQ(d.manifest.test.size(), 3u);
  EXPECT_EQ(d.manifest.node_classes.size(), 21u);
  EXPECT_EQ(d.manifest.edge_class_count(), 5);
  EXPECT_EQ(d.manifest.cow_class_ids, synthetic_cow_classes());
  EXPECT_NO_THROW(manifest_from_json(manifest_to_json(d.manifest), "m"));
}

TEST(Synthetic, ConfigValidation) {
  SynthConfig c;
  c.min_nodes = 1;
  EXPECT_THROW(synthesize_dataset(c), ValidationError);
  c = SynthConfig{};
  c.max_nodes = c.min_nodes - 1;
  EXPECT_THROW(synthesize_dataset(c), ValidationError);
  c = SynthConfig{};
  c.noise = -0.1;
  EXPECT_THROW(synthesize_dataset(c), ValidationError);
  c = SynthConfig{};
  c.val_graphs = 0;
  EXPECT_THROW(synthesize_dataset(c), ValidationError);

  Json j = Json::object();
  j["min_nodes"] = 6;
  j["seed"] = 9;
  j["extents"] = Json::array({10, 20, 30});
  const SynthConfig parsed = synth_config_from_json(j, "s.json");
  EXPECT_EQ(parsed.min_nodes, 6);
  EXPECT_EQ(parsed.seed, 9u);
  EXPECT_EQ(parsed.extents, (Vec3{10, 20, 30}));
  j["min_nodes"] = 0;
  EXPECT_THROW(synth_config_from_json(j, "s.json"), ValidationError);
}

}  // namespace
}  // namespace vesselgcn
