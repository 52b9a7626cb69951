// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_TRAINING_HPP
#define VESSELGCN_TRAINING_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vesselgcn/autodiff.hpp"
#include "vesselgcn/evaluation.hpp"
#include "vesselgcn/graph.hpp"
#include "vesselgcn/model.hpp"
#include "vesselgcn/random.hpp"

namespace vesselgcn {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First and second moment estimates mirroring the parameter set.
template <NamedParameterSet Params>
struct AdamState {
  Params first_moment;
  Params second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 0.001;

  static AdamState fresh(const Params& like, double learning_rate = 0.001) {
    AdamState s{like, like};
    auto zero = [](const std::string&, Matrix& m) {
      for (double& v : m.data()) v = 0.0;
    };
    s.first_moment.for_each(zero);
    s.second_moment.for_each(zero);
    s.learning_rate = learning_rate;
    return s;
  }
};

/// One bias-corrected Adam update. `grads` must name every parameter.
template <NamedParameterSet Params>
void adam_step(Params& params, const std::map<std::string, Matrix>& grads,
               AdamState<Params>& state) {
  std::map<std::string, Matrix*> m_slots, v_slots;
  state.first_moment.for_each([&](const std::string& n, Matrix& m) { m_slots[n] = &m; });
  state.second_moment.for_each([&](const std::string& n, Matrix& m) { v_slots[n] = &m; });

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  params.for_each([&](const std::string& name, Matrix& theta) {
    auto it = grads.find(name);
    if (it == grads.end()) throw ValidationError("adam_step: no gradient for " + name);
    const Matrix& g = it->second;
    Matrix& m = *m_slots.at(name);
    Matrix& v = *v_slots.at(name);
    if (!g.same_shape(theta) || !m.same_shape(theta) || !v.same_shape(theta)) {
      throw ShapeError("adam_step: " + name + " is " + theta.shape() + ", gradient " +
                       g.shape());
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g.data()[i];
      double& mi = m.data()[i];
      double& vi = v.data()[i];
      mi = state.beta1 * mi + (1.0 - state.beta1) * gi;
      vi = state.beta2 * vi + (1.0 - state.beta2) * gi * gi;
      const double m_hat = mi / c1;
      const double v_hat = vi / c2;
      theta.data()[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  });
}

struct LossWeights {
  double node = 1.0;
  double edge = 1.0;
};

/// Weighted sum of node and edge cross-entropies. Graphs without edges
/// contribute only the node term.
inline Var total_loss(const Var& node_logits, const Var& edge_logits,
                      const std::vector<int>& node_labels, const std::vector<int>& edge_labels,
                      LossWeights weights = {}) {
  Var loss = scale(softmax_cross_entropy(node_logits, node_labels,
                                         std::vector<bool>(node_labels.size(), true)),
                   weights.node);
  if (!edge_labels.empty()) {
    Var edge = softmax_cross_entropy(edge_logits, edge_labels,
                                     std::vector<bool>(edge_labels.size(), true));
    loss = add(loss, scale(edge, weights.edge));
  }
  return loss;
}

/// A graph ready for the model: positions normalized, operators built.
struct PreparedGraph {
  VesselGraph graph;
  GraphTopology topology;
  std::vector<int> node_labels;
  std::vector<int> edge_labels;
};

/// Validates, normalizes positions by the graph's extents (when it carries
/// them) and builds the topology. Labels are mandatory when
/// `require_labels` is set.
inline PreparedGraph prepare_graph(const VesselGraph& raw, bool require_labels,
                                   std::optional<int> edge_class_count = std::nullopt) {
  validate_graph(raw, edge_class_count);
  PreparedGraph p;
  p.graph = raw.meta.extents ? normalize_positions(raw, *raw.meta.extents) : raw;
  p.topology = build_topology(p.graph);
  bool complete = true;
  for (const auto& v : raw.nodes) {
    complete = complete && v.label.has_value();
    p.node_labels.push_back(v.label.value_or(-1));
  }
  for (const auto& e : raw.edges) {
    complete = complete && e.label.has_value();
    p.edge_labels.push_back(e.label.value_or(-1));
  }
  if (require_labels && !complete) {
    throw ValidationError("graph '" + raw.meta.scan_id + "' is missing node or edge labels");
  }
  return p;
}

/// Loss and parameter gradients for a single graph.
struct GraphGradient {
  double loss = 0.0;
  std::map<std::string, Matrix> grads;
};

inline GraphGradient graph_gradient(const PreparedGraph& g, const GraphFeatures& features,
                                    const ModelParams& params, const ModelConfig& config,
                                    LossWeights weights = {}) {
  Tape tape;
  const ModelOutput out = model_forward(tape, g.topology, features, params, config);
  const Var loss = total_loss(out.node_logits, out.edge_logits, g.node_labels,
                              g.edge_labels, weights);
  return {loss.value()(0, 0), tape.backward(loss)};
}

inline double graph_loss(const PreparedGraph& g, const GraphFeatures& features,
                         const ModelParams& params, const ModelConfig& config,
                         LossWeights weights = {}) {
  Tape tape;
  const ModelOutput out = model_forward(tape, g.topology, features, params, config);
  return total_loss(out.node_logits, out.edge_logits, g.node_labels, g.edge_labels, weights)
      .value()(0, 0);
}

inline PredictionSet predict_set(const std::vector<PreparedGraph>& graphs,
                                 const ModelParams& params, const ModelConfig& config) {
  PredictionSet out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    Prediction p = predict_labels(g.topology, extract_features(g.graph), params, config);
    out.push_back({g.graph.meta.scan_id, std::move(p.node_classes), g.node_labels,
                   std::move(p.edge_classes), g.edge_labels});
  }
  return out;
}

struct TrainConfig {
  int epochs = 12000;
  int batch_size = 32;
  bool augmentation = true;
  double max_translation = 0.10;
  double learning_rate = 0.001;
  LossWeights loss_weights;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
    if (!(max_translation >= 0.0)) throw ValidationError("TrainConfig: max_translation < 0");
    if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning_rate must be > 0");
  }
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_node_acc = 0.0;
  std::optional<double> val_edge_acc;
  int steps = 0;

  bool operator==(const EpochLog&) const = default;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = 0;
  double best_val_node_acc = -1.0;
  std::vector<EpochLog> log;
  std::int64_t optimizer_steps = 0;
};

struct TrainCallbacks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Fired whenever an epoch improves on the best validation Node_Acc.
  std::function<void(const ModelParams&, const EpochLog&)> on_best;
};

/// Mini-batch Adam training with per-epoch reshuffling and rigid translation
/// augmentation. Keeps the parameters of the epoch with the highest
/// validation Node_Acc (earliest epoch on ties).
inline TrainResult train(const std::vector<PreparedGraph>& train_set,
                         const std::vector<PreparedGraph>& val_set, const ModelConfig& model_config,
                         const TrainConfig& train_config, const TrainCallbacks& callbacks = {}) {
  model_config.validate();
  train_config.validate();
  if (train_set.empty()) throw ValidationError("train: empty training split");
  if (val_set.empty()) throw ValidationError("train: empty validation split");
  for (const auto* split : {&train_set, &val_set}) {
    for (const auto& g : *split) {
      for (int l : g.node_labels)
        if (l < 0) throw ValidationError("train: unlabeled node in '" + g.graph.meta.scan_id + "'");
      for (int l : g.edge_labels)
        if (l < 0) throw ValidationError("train: unlabeled edge in '" + g.graph.meta.scan_id + "'");
    }
  }

  ModelParams params = init_params(model_config, model_config.seed);
  auto adam = AdamState<ModelParams>::fresh(params, train_config.learning_rate);
  Rng rng(train_config.seed);

  TrainResult result;
  result.best_params = params;
  std::vector<std::size_t> order(train_set.size());
  const auto batch = static_cast<std::size_t>(train_config.batch_size);

  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    EpochLog entry;
    entry.epoch = epoch;
    double loss_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(stop - start);
      std::map<std::string, Matrix> sum;
      for (std::size_t i = start; i < stop; ++i) {
        const PreparedGraph& g = train_set[order[i]];
        const std::uint64_t aug_seed = rng.next();
        GraphFeatures features =
            train_config.augmentation && train_config.max_translation > 0.0
                ? extract_features(augment_translate(g.graph, aug_seed, train_config.max_translation))
                : extract_features(g.graph);
        GraphGradient gg =
            graph_gradient(g, features, params, model_config, train_config.loss_weights);
        if (!std::isfinite(gg.loss)) {
          throw TrainingError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b) + " (graph '" + g.graph.meta.scan_id + "')");
        }
        loss_sum += gg.loss;
        for (auto& [name, grad] : gg.grads) {
          auto it = sum.find(name);
          if (it == sum.end()) {
            sum.emplace(name, std::move(grad));
          } else {
            for (std::size_t j = 0; j < grad.size(); ++j) it->second.data()[j] += grad.data()[j];
          }
        }
      }
      for (auto& [name, grad] : sum)
        for (double& v : grad.data()) v *= inv;
      adam_step(params, sum, adam);
      ++entry.steps;
    }
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());

    const PredictionSet val = predict_set(val_set, params, model_config);
    entry.val_node_acc = node_accuracy(val);
    if (detail::count_correct(val, ItemKind::edge).second > 0) entry.val_edge_acc = edge_accuracy(val);

    result.log.push_back(entry);
    if (callbacks.on_epoch) callbacks.on_epoch(entry);
    if (entry.val_node_acc > result.best_val_node_acc) {
      result.best_val_node_acc = entry.val_node_acc;
      result.best_epoch = epoch;
      result.best_params = params;
      if (callbacks.on_best) callbacks.on_best(params, entry);
    }
  }
  result.optimizer_steps = adam.step;
  return result;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_TRAINING_HPP
