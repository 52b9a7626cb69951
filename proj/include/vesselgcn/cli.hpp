// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_CLI_HPP
#define VESSELGCN_CLI_HPP

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vesselgcn/evaluation.hpp"
#include "vesselgcn/gradcheck.hpp"
#include "vesselgcn/io.hpp"
#include "vesselgcn/model.hpp"
#include "vesselgcn/synthetic.hpp"
#include "vesselgcn/training.hpp"

namespace vesselgcn::cli {

inline constexpr double kGradcheckTolerance = 1e-5;

namespace detail {

inline void print_error(std::ostream& err, const std::string& message) {
  Json j;
  j["error"] = message;
  err << j.dump() << "\n";
}

inline std::vector<PreparedGraph> prepare_all(const std::vector<VesselGraph>& graphs,
                                              int edge_class_count) {
  std::vector<PreparedGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(prepare_graph(g, true, edge_class_count));
  return out;
}

inline int run_synth(const std::string& config_path, const std::string& out_dir,
                     std::ostream& out) {
  const SynthConfig config =
      synth_config_from_json(parse_json(read_text_file(config_path), config_path), config_path);
  const DatasetManifest m = generate_synthetic(config, out_dir);
  Json summary;
  summary["manifest"] = (std::filesystem::path(out_dir) / "manifest.json").string();
  summary["train"] = m.train.size();
  summary["val"] = m.val.size();
  summary["test"] = m.test.size();
  out << summary.dump() << "\n";
  return 0;
}

inline int run_train(const std::string& data, const std::string& model_config_path,
                     const std::string& train_config_path, const std::string& ckpt,
                     std::string log_path, std::ostream& out) {
  const Dataset dataset = load_dataset(data);
  const Json model_json = parse_json(read_text_file(model_config_path), model_config_path);
  ModelConfig model_config = model_config_from_json(model_json, model_config_path);
  const int ce = dataset.manifest.edge_class_count();
  if (model_json.contains("edge_class_count") && model_config.edge_class_count != ce) {
    throw ValidationError(model_config_path + ": edge_class_count " +
                          std::to_string(model_config.edge_class_count) +
                          " disagrees with the manifest's " + std::to_string(ce) + " edge classes");
  }
  model_config.edge_class_count = ce;
  const TrainConfig train_config = train_config_from_json(
      parse_json(read_text_file(train_config_path), train_config_path), train_config_path);

  if (log_path.empty()) log_path = ckpt + ".log.jsonl";
  if (std::filesystem::path(log_path).has_parent_path()) {
    std::filesystem::create_directories(std::filesystem::path(log_path).parent_path());
  }
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + log_path);

  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochLog& e) {
    const std::string line = epoch_log_line(e);
    log << line << "\n";
    out << line << "\n";
  };
  callbacks.on_best = [&](const ModelParams& p, const EpochLog&) {
    save_checkpoint(ckpt, model_config, p);
  };
  const TrainResult result = train(prepare_all(dataset.train, ce), prepare_all(dataset.val, ce),
                                   model_config, train_config, callbacks);
  Json summary;
  summary["best_epoch"] = result.best_epoch;
  summary["best_val_node_acc"] = result.best_val_node_acc;
  summary["checkpoint"] = ckpt;
  summary["log"] = log_path;
  out << summary.dump() << "\n";
  return 0;
}

inline int run_eval(const std::string& data, const std::string& split, const std::string& ckpt_path,
                    const std::string& averaging, std::ostream& out) {
  const Dataset dataset = load_dataset(data);
  const Checkpoint ck = load_checkpoint(ckpt_path);
  const int ce = dataset.manifest.edge_class_count();
  if (ck.config.edge_class_count != ce) {
    throw ValidationError("checkpoint predicts " + std::to_string(ck.config.edge_class_count) +
                          " edge classes, manifest declares " + std::to_string(ce));
  }
  const auto graphs = prepare_all(dataset.split(parse_split(split)), ce);
  if (graphs.empty()) throw ValidationError("split '" + split + "' is empty");
  const PredictionSet preds = predict_set(graphs, ck.params, ck.config);
  const MetricsReport report =
      evaluate(preds, dataset.manifest.cow_class_ids,
               averaging == "micro" ? Averaging::micro : Averaging::macro);
  out << metrics_to_json(report, &dataset.manifest).dump(2) << "\n";
  return 0;
}

inline int run_predict(const std::string& graph_path, const std::string& ckpt_path,
                       const std::string& out_path, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt_path);
  VesselGraph g = load_graph(graph_path);
  const PreparedGraph prepared = prepare_graph(g, false);
  const Prediction p =
      predict_labels(prepared.topology, extract_features(prepared.graph), ck.params, ck.config);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].label = p.node_classes[i];
  for (std::size_t k = 0; k < g.edges.size(); ++k) g.edges[k].label = p.edge_classes[k];
  save_graph(g, out_path);
  Json summary;
  summary["out"] = out_path;
  summary["nodes"] = g.nodes.size();
  summary["edges"] = g.edges.size();
  out << summary.dump() << "\n";
  return 0;
}

inline int run_gradcheck(std::uint64_t seed, std::ostream& out) {
  ModelConfig config;
  config.seed = seed;
  const VesselGraph g = random_labeled_graph(seed, 8, 9, config.edge_class_count);
  const auto checks = check_model_gradients(g, config, seed);
  bool ok = true;
  out << std::left << std::setw(22) << "parameter" << std::right << std::setw(9) << "scalars"
      << std::setw(16) << "max|grad|" << std::setw(16) << "worst rel err" << "\n";
  for (const auto& c : checks) {
    ok = ok && c.worst_relative_error < kGradcheckTolerance;
    out << std::left << std::setw(22) << c.name << std::right << std::setw(9) << c.scalars
        << std::setw(16) << std::scientific << std::setprecision(3) << c.max_abs_gradient
        << std::setw(16) << c.worst_relative_error << std::defaultfloat << "\n";
  }
  out << (ok ? "PASS" : "FAIL") << " (tolerance " << kGradcheckTolerance << ")\n";
  return ok ? 0 : 1;
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Graph convolutional vessel labeling"};
  app.require_subcommand(1);

  std::string synth_config, synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth->add_option("--config", synth_config, "Synthetic dataset config (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory")->required();

  std::string data, model_cfg, train_cfg, ckpt_out, log_path;
  auto* train_cmd = app.add_subcommand("train", "Train and keep the best validation checkpoint");
  train_cmd->add_option("--data", data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--model-config", model_cfg, "Model config (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--train-config", train_cfg, "Training config (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ckpt_out, "Checkpoint path")->required();
  train_cmd->add_option("--log", log_path, "JSON-lines log path (default <out>.log.jsonl)");

  std::string eval_data, split = "test", eval_ckpt, averaging = "macro";
  auto* eval = app.add_subcommand("eval", "Print metrics for one split");
  eval->add_option("--data", eval_data, "Dataset manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--split", split, "train | val | test");
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--averaging", averaging, "Overall precision/recall averaging")
      ->check(CLI::IsMember({"macro", "micro"}));

  std::string graph_path, predict_ckpt, predict_out;
  auto* predict = app.add_subcommand("predict", "Label one graph");
  predict->add_option("--graph", graph_path, "Input graph (JSON)")->required()->check(CLI::ExistingFile);
  predict->add_option("--ckpt", predict_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", predict_out, "Output graph path")->required();

  std::uint64_t seed = 7;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare backprop with finite differences");
  gradcheck->add_option("--seed", seed, "Seed for graph and parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << app.help() << "\n";
    detail::print_error(err, e.what());
    return 2;
  }

  try {
    if (*synth) return detail::run_synth(synth_config, synth_out, out);
    if (*train_cmd) return detail::run_train(data, model_cfg, train_cfg, ckpt_out, log_path, out);
    if (*eval) return detail::run_eval(eval_data, split, eval_ckpt, averaging, out);
    if (*predict) return detail::run_predict(graph_path, predict_ckpt, predict_out, out);
    if (*gradcheck) return detail::run_gradcheck(seed, out);
  } catch (const std::exception& e) {
    detail::print_error(err, e.what());
    return 1;
  }
  return 2;
}

}  // namespace vesselgcn::cli

#endif  // VESSELGCN_CLI_HPP
