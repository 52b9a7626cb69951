// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_IO_HPP
#define VESSELGCN_IO_HPP

// JSON encodings for graphs, dataset manifests, checkpoints, configs,
// metric reports and training logs.
//
// Doubles are written in the shortest decimal form that parses back to the
// same bits (at most 17 significant digits), so every document produced
// here round-trips exactly.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vesselgcn/evaluation.hpp"
#include "vesselgcn/graph.hpp"
#include "vesselgcn/model.hpp"
#include "vesselgcn/training.hpp"

namespace vesselgcn {

using Json = nlohmann::ordered_json;

/// Schema or content error in an input document, located by file and JSON
/// pointer.
class FormatError : public ValidationError {
 public:
  FormatError(const std::string& file, const std::string& pointer, const std::string& what)
      : ValidationError(file + ": " + (pointer.empty() ? "/" : pointer) + ": " + what) {}
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline Json parse_json(const std::string& text, const std::string& file) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(file, "", std::string("malformed JSON: ") + e.what());
  }
}

namespace detail {

/// Typed field access that reports the document location on failure.
class Reader {
 public:
  explicit Reader(std::string file) : file_(std::move(file)) {}

  const Json& field(const Json& obj, const std::string& ptr, const char* key) const {
    if (!obj.is_object()) fail(ptr, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(ptr + "/" + key, "missing field");
    return *it;
  }

  double real(const Json& v, const std::string& ptr) const {
    if (!v.is_number()) fail(ptr, "expected a number, got " + v.dump());
    return v.get<double>();
  }

  std::int64_t integer(const Json& v, const std::string& ptr) const {
    if (!v.is_number_integer()) fail(ptr, "expected an integer, got " + v.dump());
    return v.get<std::int64_t>();
  }

  std::size_t index(const Json& v, const std::string& ptr) const {
    const auto i = integer(v, ptr);
    if (i < 0) fail(ptr, "negative index " + std::to_string(i));
    return static_cast<std::size_t>(i);
  }

  Vec3 vec3(const Json& v, const std::string& ptr) const {
    if (!v.is_array() || v.size() != 3) fail(ptr, "expected a 3-element array, got " + v.dump());
    return {real(v[0], ptr + "/0"), real(v[1], ptr + "/1"), real(v[2], ptr + "/2")};
  }

  std::optional<int> label(const Json& obj, const std::string& ptr) const {
    auto it = obj.find("label");
    if (it == obj.end() || it->is_null()) return std::nullopt;
    return static_cast<int>(integer(*it, ptr + "/label"));
  }

  const Json& array(const Json& v, const std::string& ptr) const {
    if (!v.is_array()) fail(ptr, "expected an array");
    return v;
  }

  [[noreturn]] void fail(const std::string& ptr, const std::string& what) const {
    throw FormatError(file_, ptr, what);
  }

 private:
  std::string file_;
};

inline Json vec3_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

inline Json label_json(const std::optional<int>& l) { return l ? Json(*l) : Json(nullptr); }

}  // namespace detail

// ---------------------------------------------------------------- graphs ---

inline Json graph_to_json(const VesselGraph& g) {
  Json nodes = Json::array();
  for (const auto& v : g.nodes) {
    Json n;
    n["pos"] = detail::vec3_json(v.position);
    n["radius"] = v.radius;
    n["dir"] = detail::vec3_json(v.direction_embedding);
    n["label"] = detail::label_json(v.label);
    nodes.push_back(std::move(n));
  }
  Json edges = Json::array();
  for (const auto& e : g.edges) {
    Json j;
    j["s"] = e.sender;
    j["r"] = e.receiver;
    j["dir"] = detail::vec3_json(e.direction);
    j["dist"] = e.distance;
    j["mean_radius"] = e.mean_radius;
    j["label"] = detail::label_json(e.label);
    edges.push_back(std::move(j));
  }
  Json meta;
  if (g.meta.extents) meta["extents"] = detail::vec3_json(*g.meta.extents);
  meta["scan_id"] = g.meta.scan_id;
  Json doc;
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  doc["meta"] = std::move(meta);
  return doc;
}

/// Decodes one graph document and enforces every graph invariant.
inline VesselGraph graph_from_json(const Json& doc, const std::string& file,
                                   std::optional<int> edge_class_count = std::nullopt,
                                   const std::string& root = "") {
  const detail::Reader rd(file);
  VesselGraph g;
  const Json& nodes = rd.array(rd.field(doc, root, "nodes"), root + "/nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string p = root + "/nodes/" + std::to_string(i);
    NodeRecord v;
    v.position = rd.vec3(rd.field(nodes[i], p, "pos"), p + "/pos");
    v.radius = rd.real(rd.field(nodes[i], p, "radius"), p + "/radius");
    v.direction_embedding = rd.vec3(rd.field(nodes[i], p, "dir"), p + "/dir");
    v.label = rd.label(nodes[i], p);
    g.nodes.push_back(v);
  }
  const Json& edges = rd.array(rd.field(doc, root, "edges"), root + "/edges");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string p = root + "/edges/" + std::to_string(k);
    EdgeRecord e;
    e.sender = rd.index(rd.field(edges[k], p, "s"), p + "/s");
    e.receiver = rd.index(rd.field(edges[k], p, "r"), p + "/r");
    e.direction = rd.vec3(rd.field(edges[k], p, "dir"), p + "/dir");
    e.distance = rd.real(rd.field(edges[k], p, "dist"), p + "/dist");
    e.mean_radius = rd.real(rd.field(edges[k], p, "mean_radius"), p + "/mean_radius");
    e.label = rd.label(edges[k], p);
    g.edges.push_back(e);
  }
  if (auto it = doc.find("meta"); it != doc.end() && !it->is_null()) {
    const std::string p = root + "/meta";
    if (auto ex = it->find("extents"); ex != it->end() && !ex->is_null()) {
      g.meta.extents = rd.vec3(*ex, p + "/extents");
    }
    if (auto id = it->find("scan_id"); id != it->end()) {
      if (!id->is_string()) rd.fail(p + "/scan_id", "expected a string");
      g.meta.scan_id = id->get<std::string>();
    }
  }
  try {
    validate_graph(g, edge_class_count);
  } catch (const ValidationError& e) {
    // validate_graph locates problems as "nodes[i].field"; turn that into a
    // JSON pointer.
    std::string msg = e.what();
    std::string where = msg.substr(0, msg.find(':'));
    std::string ptr = root + "/";
    for (char c : where) {
      if (c == '[' || c == '.') ptr += '/';
      else if (c != ']') ptr += c;
    }
    throw FormatError(file, ptr, msg.substr(msg.find(':') + 2));
  }
  return g;
}

inline std::string dump_graph(const VesselGraph& g) { return graph_to_json(g).dump(1) + "\n"; }

inline void save_graph(const VesselGraph& g, const std::filesystem::path& path) {
  write_text_file(path, dump_graph(g));
}

/// Reads a single-graph .json file or a .jsonl file with one graph per line.
inline std::vector<VesselGraph> load_graphs(const std::filesystem::path& path,
                                            std::optional<int> edge_class_count = std::nullopt) {
  const std::string text = read_text_file(path);
  const std::string file = path.string();
  std::vector<VesselGraph> out;
  if (path.extension() == ".jsonl") {
    std::istringstream lines(text);
    std::string line;
    for (std::size_t n = 1; std::getline(lines, line); ++n) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.push_back(graph_from_json(parse_json(line, file + ":" + std::to_string(n)),
                                    file + ":" + std::to_string(n), edge_class_count));
    }
  } else {
    out.push_back(graph_from_json(parse_json(text, file), file, edge_class_count));
  }
  return out;
}

inline VesselGraph load_graph(const std::filesystem::path& path,
                              std::optional<int> edge_class_count = std::nullopt) {
  auto graphs = load_graphs(path, edge_class_count);
  if (graphs.size() != 1) {
    throw FormatError(path.string(), "", "expected exactly one graph, found " +
                                             std::to_string(graphs.size()));
  }
  return std::move(graphs.front());
}

// -------------------------------------------------------------- manifest ---

struct DatasetManifest {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::vector<std::string> node_classes;
  std::vector<std::string> edge_classes;
  std::set<int> cow_class_ids;

  int edge_class_count() const { return static_cast<int>(edge_classes.size()); }
};

inline Json manifest_to_json(const DatasetManifest& m) {
  Json j;
  j["train"] = m.train;
  j["val"] = m.val;
  j["test"] = m.test;
  j["node_classes"] = m.node_classes;
  j["edge_classes"] = m.edge_classes;
  j["cow_class_ids"] = Json(std::vector<int>(m.cow_class_ids.begin(), m.cow_class_ids.end()));
  return j;
}

inline DatasetManifest manifest_from_json(const Json& doc, const std::string& file) {
  const detail::Reader rd(file);
  auto strings = [&](const char* key) {
    const Json& a = rd.array(rd.field(doc, "", key), std::string("/") + key);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_string()) rd.fail(std::string("/") + key + "/" + std::to_string(i), "expected a string");
      out.push_back(a[i].get<std::string>());
    }
    return out;
  };
  DatasetManifest m;
  m.train = strings("train");
  m.val = strings("val");
  m.test = strings("test");
  m.node_classes = strings("node_classes");
  m.edge_classes = strings("edge_classes");
  if (m.node_classes.size() != static_cast<std::size_t>(kNodeClassCount)) {
    rd.fail("/node_classes", "expected 21 node class names, got " +
                                 std::to_string(m.node_classes.size()));
  }
  if (m.edge_classes.empty()) rd.fail("/edge_classes", "at least one edge class required");
  const Json& cow = rd.array(rd.field(doc, "", "cow_class_ids"), "/cow_class_ids");
  for (std::size_t i = 0; i < cow.size(); ++i) {
    const std::string p = "/cow_class_ids/" + std::to_string(i);
    const auto id = rd.integer(cow[i], p);
    if (id < 0 || id >= kNodeClassCount) rd.fail(p, "class " + std::to_string(id) + " outside [0,21)");
    m.cow_class_ids.insert(static_cast<int>(id));
  }
  std::set<std::string> seen;
  for (const auto* split : {&m.train, &m.val, &m.test}) {
    for (const auto& path : *split) {
      if (!seen.insert(std::filesystem::path(path).lexically_normal().string()).second) {
        rd.fail("", "splits overlap: '" + path + "' is listed more than once");
      }
    }
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  return manifest_from_json(parse_json(read_text_file(path), path.string()), path.string());
}

enum class Split { train, val, test };

inline Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + s + "' (expected train, val or test)");
}

struct Dataset {
  DatasetManifest manifest;
  std::vector<VesselGraph> train;
  std::vector<VesselGraph> val;
  std::vector<VesselGraph> test;

  const std::vector<VesselGraph>& split(Split s) const {
    return s == Split::train ? train : s == Split::val ? val : test;
  }
};

/// Loads every graph named by a manifest, resolving relative paths against
/// the manifest's directory. Order follows the manifest.
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  Dataset d;
  d.manifest = load_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  const int ce = d.manifest.edge_class_count();
  auto load = [&](const std::vector<std::string>& paths, std::vector<VesselGraph>& out) {
    for (const auto& p : paths) {
      const std::filesystem::path rel(p);
      const std::filesystem::path full = rel.is_absolute() ? rel : base / rel;
      for (auto& g : load_graphs(full, ce)) out.push_back(std::move(g));
    }
  };
  load(d.manifest.train, d.train);
  load(d.manifest.val, d.val);
  load(d.manifest.test, d.test);
  return d;
}

// --------------------------------------------------------------- configs ---

inline Json model_config_to_json(const ModelConfig& c) {
  Json j;
  j["encoder_depth"] = c.encoder_depth;
  j["core_depth"] = c.core_depth;
  j["decoder_depth"] = c.decoder_depth;
  j["hidden_width"] = c.hidden_width;
  j["pool_kernel"] = c.pool_kernel;
  j["message_passing_rounds"] = c.message_passing_rounds;
  j["pooling_enabled"] = c.pooling_enabled;
  j["edge_class_count"] = c.edge_class_count;
  j["seed"] = c.seed;
  return j;
}

namespace detail {
template <typename T>
void optional_field(const Json& j, const char* key, T& out, const Reader& rd) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    rd.fail(std::string("/") + key, "wrong type: " + it->dump());
  }
}
}  // namespace detail

/// Missing keys keep their defaults.
inline ModelConfig model_config_from_json(const Json& j, const std::string& file) {
  const detail::Reader rd(file);
  if (!j.is_object()) rd.fail("", "expected an object");
  ModelConfig c;
  detail::optional_field(j, "encoder_depth", c.encoder_depth, rd);
  detail::optional_field(j, "core_depth", c.core_depth, rd);
  detail::optional_field(j, "decoder_depth", c.decoder_depth, rd);
  detail::optional_field(j, "hidden_width", c.hidden_width, rd);
  detail::optional_field(j, "pool_kernel", c.pool_kernel, rd);
  detail::optional_field(j, "message_passing_rounds", c.message_passing_rounds, rd);
  detail::optional_field(j, "pooling_enabled", c.pooling_enabled, rd);
  detail::optional_field(j, "edge_class_count", c.edge_class_count, rd);
  detail::optional_field(j, "seed", c.seed, rd);
  c.validate();
  return c;
}

inline Json train_config_to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["augmentation"] = c.augmentation;
  j["max_translation"] = c.max_translation;
  j["learning_rate"] = c.learning_rate;
  j["node_loss_weight"] = c.loss_weights.node;
  j["edge_loss_weight"] = c.loss_weights.edge;
  j["seed"] = c.seed;
  return j;
}

inline TrainConfig train_config_from_json(const Json& j, const std::string& file) {
  const detail::Reader rd(file);
  if (!j.is_object()) rd.fail("", "expected an object");
  TrainConfig c;
  detail::optional_field(j, "epochs", c.epochs, rd);
  detail::optional_field(j, "batch_size", c.batch_size, rd);
  detail::optional_field(j, "augmentation", c.augmentation, rd);
  detail::optional_field(j, "max_translation", c.max_translation, rd);
  detail::optional_field(j, "learning_rate", c.learning_rate, rd);
  detail::optional_field(j, "node_loss_weight", c.loss_weights.node, rd);
  detail::optional_field(j, "edge_loss_weight", c.loss_weights.edge, rd);
  detail::optional_field(j, "seed", c.seed, rd);
  c.validate();
  return c;
}

// ------------------------------------------------------------ checkpoint ---

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

inline Json checkpoint_to_json(const ModelConfig& config, const ModelParams& params) {
  Json named;
  params.for_each([&](const std::string& name, const Matrix& m) {
    Json entry;
    entry["shape"] = Json::array({m.rows(), m.cols()});
    entry["values"] = m.data();
    named[name] = std::move(entry);
  });
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = model_config_to_json(config);
  j["params"] = std::move(named);
  return j;
}

inline std::string dump_checkpoint(const ModelConfig& config, const ModelParams& params) {
  return checkpoint_to_json(config, params).dump() + "\n";
}

inline Checkpoint checkpoint_from_json(const Json& j, const std::string& file) {
  const detail::Reader rd(file);
  const auto version = rd.integer(rd.field(j, "", "format_version"), "/format_version");
  if (version != kCheckpointFormatVersion) {
    rd.fail("/format_version", "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config = model_config_from_json(rd.field(j, "", "config"), file);
  ck.params = ModelParams::zeros(ck.config);
  const Json& named = rd.field(j, "", "params");
  std::size_t seen = 0;
  ck.params.for_each([&](const std::string& name, Matrix& m) {
    const std::string p = "/params/" + name;
    const Json& entry = rd.field(named, "/params", name.c_str());
    const Json& shape = rd.array(rd.field(entry, p, "shape"), p + "/shape");
    if (shape.size() != 2 || rd.index(shape[0], p + "/shape/0") != m.rows() ||
        rd.index(shape[1], p + "/shape/1") != m.cols()) {
      rd.fail(p + "/shape", "expected [" + std::to_string(m.rows()) + "," +
                                std::to_string(m.cols()) + "], got " + shape.dump());
    }
    const Json& values = rd.array(rd.field(entry, p, "values"), p + "/values");
    if (values.size() != m.size()) rd.fail(p + "/values", "wrong number of values");
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.data()[i] = rd.real(values[i], p + "/values/" + std::to_string(i));
    }
    ++seen;
  });
  if (seen != named.size()) rd.fail("/params", "unexpected extra parameters");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                            const ModelParams& params) {
  write_text_file(path, dump_checkpoint(config, params));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(parse_json(read_text_file(path), path.string()), path.string());
}

// --------------------------------------------------------------- reports ---

inline std::string class_key(ItemKind kind, int id, const DatasetManifest* manifest) {
  const std::string prefix = kind == ItemKind::node ? "node:" : "edge:";
  if (manifest) {
    const auto& names = kind == ItemKind::node ? manifest->node_classes : manifest->edge_classes;
    if (id >= 0 && static_cast<std::size_t>(id) < names.size()) return prefix + names[id];
  }
  return prefix + std::to_string(id);
}

inline Json metrics_to_json(const MetricsReport& r, const DatasetManifest* manifest = nullptr) {
  Json j;
  j["node_acc"] = r.node_acc;
  j["node_wrong"] = r.node_wrong;
  j["cow_node_solve"] = r.cow_node_solve;
  j["edge_acc"] = r.edge_acc;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  Json table = Json::object();
  for (const auto& s : r.per_class) {
    Json e;
    e["precision"] = s.precision;
    e["recall"] = s.recall;
    e["support"] = s.support;
    table[class_key(s.kind, s.class_id, manifest)] = std::move(e);
  }
  j["per_class"] = std::move(table);
  return j;
}

inline std::string epoch_log_line(const EpochLog& e) {
  Json j;
  j["epoch"] = e.epoch;
  j["train_loss"] = e.train_loss;
  j["val_node_acc"] = e.val_node_acc;
  if (e.val_edge_acc) j["val_edge_acc"] = *e.val_edge_acc;
  j["steps"] = e.steps;
  return j.dump();
}

}  // namespace vesselgcn

#endif  // VESSELGCN_IO_HPP
