// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <string>

#include "test_support.hpp"
#include "vesselgcn/io.hpp"
#include "vesselgcn/synthetic.hpp"

namespace vesselgcn {
namespace {

using testing::TempDir;

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

VesselGraph awkward_graph() {
  VesselGraph g = random_labeled_graph(5, 6, 8, 4);
  g.nodes[0].position = {0.1, 1.0 / 3.0, std::nextafter(0.5, 1.0)};
  g.nodes[1].radius = std::numeric_limits<double>::denorm_min();
  g.nodes[2].radius = 1e300;
  g.nodes[3].direction_embedding = {0.0, 0.0, 0.0};
  g.nodes[4].label.reset();
  g.edges[2].label.reset();
  g.edges[3].distance = 5e-324 * 3;
  g.meta.extents = Vec3{256.0, 255.5, 1e-3};
  g.meta.scan_id = "scan \"quoted\" / 7";
  return g;
}

TEST(GraphJson, RoundTripIsBitExact) {
  const VesselGraph g = awkward_graph();
  const std::string text = dump_graph(g);
  const VesselGraph back = graph_from_json(parse_json(text, "mem"), "mem");
  EXPECT_EQ(back, g);
  EXPECT_EQ(dump_graph(back), text);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const VesselGraph r = random_labeled_graph(seed, 7, 9, 5);
    EXPECT_EQ(graph_from_json(parse_json(dump_graph(r), "mem"), "mem"), r);
  }
}

TEST(GraphJson, SaveAndLoadFiles) {
  TempDir dir;
  const VesselGraph g = awkward_graph();
  save_graph(g, dir / "one.json");
  EXPECT_EQ(load_graph(dir / "one.json"), g);
  EXPECT_EQ(read_text_file(dir / "one.json"), dump_graph(g));

  const VesselGraph h = random_labeled_graph(8, 5, 5, 4);
  write_text_file(dir / "many.jsonl", graph_to_json(g).dump() + "\n\n" + graph_to_json(h).dump() + "\n");
  const auto both = load_graphs(dir / "many.jsonl");
  ASSERT_EQ(both.size(), 2u);
  EXPECT_EQ(both[0], g);
  EXPECT_EQ(both[1], h);
  EXPECT_THROW(load_graph(dir / "many.jsonl"), FormatError);
}

TEST(GraphJson, OutOfBoundsIndexNamesFileAndPointer) {
  Json doc = graph_to_json(random_labeled_graph(1, 4, 5, 4));
  doc["edges"][2]["r"] = 4;
  const std::string msg = error_of([&] { graph_from_json(doc, "g.json"); });
  EXPECT_NE(msg.find("g.json"), std::string::npos) << msg;
  EXPECT_NE(msg.find("/edges/2/r"), std::string::npos) << msg;
  EXPECT_NE(msg.find("out of bounds"), std::string::npos) << msg;
  EXPECT_THROW(graph_from_json(doc, "g.json"), FormatError);
}

TEST(GraphJson, SchemaViolationsAreLocated) {
  const Json good = graph_to_json(random_labeled_graph(1, 4, 5, 4));
  Json doc = good;
  doc["nodes"][1].erase("radius");
  EXPECT_NE(error_of([&] { graph_from_json(doc, "f"); }).find("/nodes/1/radius"), std::string::npos);
  doc = good;
  doc["nodes"][0]["pos"] = Json::array({1, 2});
  EXPECT_NE(error_of([&] { graph_from_json(doc, "f"); }).find("/nodes/0/pos"), std::string::npos);
  doc = good;
  doc["edges"][0]["s"] = "zero";
  EXPECT_NE(error_of([&] { graph_from_json(doc, "f"); }).find("/edges/0/s"), std::string::npos);
  doc = good;
  doc["nodes"][3]["label"] = 21;
  EXPECT_NE(error_of([&] { graph_from_json(doc, "f"); }).find("/nodes/3/label"), std::string::npos);
  doc = good;
  doc["edges"][1]["label"] = 4;
  EXPECT_NE(error_of([&] { graph_from_json(doc, "f", 4); }).find("/edges/1/label"), std::string::npos);
  EXPECT_NO_THROW(graph_from_json(doc, "f", 5));
  EXPECT_THROW(parse_json("{\"nodes\": [", "broken.json"), FormatError);
}

DatasetManifest tiny_manifest() {
  DatasetManifest m;
  m.train = {"graphs/a.json"};
  m.val = {"graphs/b.json"};
  m.test = {"graphs/c.json"};
  for (int c = 0; c < 21; ++c) m.node_classes.push_back("n" + std::to_string(c));
  m.edge_classes = {"e0", "e1", "e2", "e3"};
  m.cow_class_ids = {2, 5};
  return m;
}

TEST(Manifest, RoundTripAndValidation) {
  const DatasetManifest m = tiny_manifest();
  const DatasetManifest back = manifest_from_json(manifest_to_json(m), "m");
  EXPECT_EQ(back.train, m.train);
  EXPECT_EQ(back.edge_classes, m.edge_classes);
  EXPECT_EQ(back.cow_class_ids, m.cow_class_ids);
  EXPECT_EQ(back.edge_class_count(), 4);

  Json overlap = manifest_to_json(m);
  overlap["test"] = Json::array({"graphs/./a.json"});
  EXPECT_NE(error_of([&] { manifest_from_json(overlap, "m"); }).find("overlap"), std::string::npos);

  Json short_names = manifest_to_json(m);
  short_names["node_classes"].erase(0);
  EXPECT_THROW(manifest_from_json(short_names, "m"), FormatError);

  Json bad_cow = manifest_to_json(m);
  bad_cow["cow_class_ids"] = Json::array({30});
  EXPECT_NE(error_of([&] { manifest_from_json(bad_cow, "m"); }).find("/cow_class_ids/0"),
            std::string::npos);
}

TEST(Manifest, LoadDatasetResolvesRelativePaths) {
  TempDir dir;
  const DatasetManifest m = tiny_manifest();
  const VesselGraph a = random_labeled_graph(1, 5, 5, 4), b = random_labeled_graph(2, 5, 6, 4),
                    c = random_labeled_graph(3, 6, 7, 4);
  save_graph(a, dir / "graphs/a.json");
  save_graph(b, dir / "graphs/b.json");
  save_graph(c, dir / "graphs/c.json");
  write_text_file(dir / "manifest.json", manifest_to_json(m).dump());
  const Dataset d = load_dataset(dir / "manifest.json");
  EXPECT_EQ(d.train, std::vector<VesselGraph>{a});
  EXPECT_EQ(d.split(parse_split("val")), std::vector<VesselGraph>{b});
  EXPECT_EQ(d.split(Split::test), std::vector<VesselGraph>{c});
  EXPECT_THROW(parse_split("holdout"), ValidationError);

  // Edge labels are range-checked against the manifest's edge classes.
  VesselGraph wide = c;
  wide.edges[0].label = 4;
  save_graph(wide, dir / "graphs/c.json");
  EXPECT_THROW(load_dataset(dir / "manifest.json"), FormatError);
}

TEST(Configs, RoundTripAndDefaults) {
  ModelConfig mc;
  mc.hidden_width = 17;
  mc.pooling_enabled = false;
  mc.seed = 1234567890123ULL;
  EXPECT_EQ(model_config_from_json(model_config_to_json(mc), "m"), mc);
  EXPECT_EQ(model_config_from_json(Json::object(), "m"), ModelConfig{});

  TrainConfig tc;
  tc.epochs = 5;
  tc.learning_rate = 0.0123;
  tc.loss_weights = {0.5, 2.0};
  const TrainConfig back = train_config_from_json(train_config_to_json(tc), "t");
  EXPECT_EQ(back.epochs, 5);
  EXPECT_EQ(back.learning_rate, 0.0123);
  EXPECT_EQ(back.loss_weights.edge, 2.0);

  Json bad = Json::object();
  bad["hidden_width"] = "wide";
  EXPECT_NE(error_of([&] { model_config_from_json(bad, "m.json"); }).find("/hidden_width"),
            std::string::npos);
  bad = Json::object();
  bad["batch_size"] = 0;
  EXPECT_THROW(train_config_from_json(bad, "t.json"), ValidationError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir dir;
  ModelConfig config;
  config.edge_class_count = 6;
  ModelParams p = init_params(config, 77);
  p.node_head(0, 0) = 1.0 / 3.0;
  p.edge_head(1, 2) = -std::numeric_limits<double>::denorm_min();
  save_checkpoint(dir / "ck.json", config, p);
  const Checkpoint ck = load_checkpoint(dir / "ck.json");
  EXPECT_EQ(ck.config, config);
  EXPECT_EQ(ck.params, p);
  EXPECT_EQ(dump_checkpoint(ck.config, ck.params), read_text_file(dir / "ck.json"));
}

TEST(Checkpoint, RejectsMismatches) {
  ModelConfig config;
  Json j = checkpoint_to_json(config, init_params(config, 1));
  Json wrong_version = j;
  wrong_version["format_version"] = 2;
  EXPECT_THROW(checkpoint_from_json(wrong_version, "c"), FormatError);
  Json wrong_shape = j;
  wrong_shape["params"]["node_head"]["shape"] = Json::array({63, 21});
  EXPECT_NE(error_of([&] { checkpoint_from_json(wrong_shape, "c"); }).find("/params/node_head/shape"),
            std::string::npos);
  Json extra = j;
  extra["params"]["bias"] = extra["params"]["node_head"];
  EXPECT_THROW(checkpoint_from_json(extra, "c"), FormatError);
  Json missing = j;
  missing["params"].erase("edge_head");
  EXPECT_THROW(checkpoint_from_json(missing, "c"), FormatError);
}

TEST(Reports, MetricsJsonUsesColumnKeysAndClassNames) {
  MetricsReport r;
  r.node_acc = 0.5;
  r.per_class.push_back({ItemKind::node, 2, 1, 1, 2, 1.0, 0.5});
  r.per_class.push_back({ItemKind::edge, 9, 0, 0, 1, 0.0, 0.0});
  const DatasetManifest m = tiny_manifest();
  const Json j = metrics_to_json(r, &m);
  for (const char* key : {"node_acc", "node_wrong", "cow_node_solve", "edge_acc", "precision", "recall"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["per_class"].contains("node:n2"));
  EXPECT_TRUE(j["per_class"].contains("edge:9"));
  EXPECT_EQ(j["per_class"]["node:n2"]["support"], 2);
}

TEST(Reports, EpochLogLine) {
  EpochLog e;
  e.epoch = 3;
  e.train_loss = 0.25;
  e.val_node_acc = 0.5;
  e.steps = 2;
  EXPECT_EQ(epoch_log_line(e), R"({"epoch":3,"train_loss":0.25,"val_node_acc":0.5,"steps":2})");
  e.val_edge_acc = 1.0;
  EXPECT_NE(epoch_log_line(e).find("\"val_edge_acc\":1.0"), std::string::npos);
}

}  // namespace
}  // namespace vesselgcn
