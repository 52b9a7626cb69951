// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VESSELGCN_EVALUATION_HPP
#define VESSELGCN_EVALUATION_HPP

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vesselgcn/matrix.hpp"

namespace vesselgcn {

/// Predicted and true classes for one scan.
struct GraphPrediction {
  std::string scan_id;
  std::vector<int> node_pred;
  std::vector<int> node_truth;
  std::vector<int> edge_pred;
  std::vector<int> edge_truth;
};

using PredictionSet = std::vector<GraphPrediction>;

enum class Averaging { macro, micro };

enum class ItemKind { node, edge };

struct ClassScore {
  ItemKind kind = ItemKind::node;
  int class_id = 0;
  std::size_t true_positive = 0;
  std::size_t predicted = 0;  // TP + FP
  std::size_t support = 0;    // TP + FN
  double precision = 0.0;
  double recall = 0.0;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  std::vector<ClassScore> per_class;  // ordered by (kind, class_id)
};

struct MetricsReport {
  double node_acc = 0.0;
  double node_wrong = 0.0;
  double cow_node_solve = 0.0;
  double edge_acc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<ClassScore> per_class;
};

namespace detail {
inline void check_lengths(const PredictionSet& preds) {
  for (const auto& g : preds) {
    if (g.node_pred.size() != g.node_truth.size() || g.edge_pred.size() != g.edge_truth.size()) {
      throw ValidationError("prediction lengths differ from truth lengths in scan '" +
                            g.scan_id + "'");
    }
  }
}

inline std::pair<std::size_t, std::size_t> count_correct(const PredictionSet& preds,
                                                         ItemKind kind) {
  std::size_t correct = 0, total = 0;
  for (const auto& g : preds) {
    const auto& p = kind == ItemKind::node ? g.node_pred : g.edge_pred;
    const auto& t = kind == ItemKind::node ? g.node_truth : g.edge_truth;
    for (std::size_t i = 0; i < p.size(); ++i) correct += p[i] == t[i];
    total += p.size();
  }
  return {correct, total};
}
}  // namespace detail

/// Correct nodes over all nodes, pooled across scans.
inline double node_accuracy(const PredictionSet& preds) {
  detail::check_lengths(preds);
  const auto [correct, total] = detail::count_correct(preds, ItemKind::node);
  if (total == 0) throw ValidationError("node_accuracy: no nodes");
  return static_cast<double>(correct) / static_cast<double>(total);
}

inline double edge_accuracy(const PredictionSet& preds) {
  detail::check_lengths(preds);
  const auto [correct, total] = detail::count_correct(preds, ItemKind::edge);
  if (total == 0) throw ValidationError("edge_accuracy: no edges");
  return static_cast<double>(correct) / static_cast<double>(total);
}

/// Mean number of mislabeled nodes per scan.
inline double node_wrong(const PredictionSet& preds) {
  detail::check_lengths(preds);
  if (preds.empty()) throw ValidationError("node_wrong: no scans");
  const auto [correct, total] = detail::count_correct(preds, ItemKind::node);
  return static_cast<double>(total - correct) / static_cast<double>(preds.size());
}

/// Fraction of scans whose circle-of-Willis nodes (by true class) are all
/// predicted correctly. Scans without such nodes count as solved.
inline double cow_node_solve(const PredictionSet& preds, const std::set<int>& cow_classes) {
  detail::check_lengths(preds);
  if (cow_classes.empty()) throw ValidationError("cow_node_solve: empty CoW class set");
  if (preds.empty()) throw ValidationError("cow_node_solve: no scans");
  std::size_t solved = 0;
  for (const auto& g : preds) {
    bool ok = true;
    for (std::size_t i = 0; i < g.node_truth.size() && ok; ++i) {
      if (cow_classes.contains(g.node_truth[i]) && g.node_pred[i] != g.node_truth[i]) ok = false;
    }
    solved += ok;
  }
  return static_cast<double>(solved) / static_cast<double>(preds.size());
}

/// Per-class precision and recall over node and edge items together, with
/// node and edge classes kept apart. The overall figure is either the mean
/// over classes present in the ground truth (macro) or the pooled ratio
/// (micro).
inline PrecisionRecall precision_recall(const PredictionSet& preds,
                                        Averaging averaging = Averaging::macro) {
  detail::check_lengths(preds);
  std::map<std::pair<ItemKind, int>, ClassScore> table;
  std::size_t items = 0, hits = 0;
  auto tally = [&](ItemKind kind, const std::vector<int>& p, const std::vector<int>& t) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto& truth = table[{kind, t[i]}];
      auto& guess = table[{kind, p[i]}];
      truth.kind = guess.kind = kind;
      truth.class_id = t[i];
      guess.class_id = p[i];
      ++truth.support;
      ++guess.predicted;
      if (p[i] == t[i]) {
        ++truth.true_positive;
        ++hits;
      }
      ++items;
    }
  };
  for (const auto& g : preds) {
    tally(ItemKind::node, g.node_pred, g.node_truth);
    tally(ItemKind::edge, g.edge_pred, g.edge_truth);
  }
  if (items == 0) throw ValidationError("precision_recall: no labeled items");

  PrecisionRecall out;
  double p_sum = 0.0, r_sum = 0.0;
  std::size_t present = 0;
  for (auto& [key, s] : table) {
    s.precision = s.predicted == 0 ? 0.0
                                   : static_cast<double>(s.true_positive) /
                                         static_cast<double>(s.predicted);
    s.recall = s.support == 0 ? 0.0
                              : static_cast<double>(s.true_positive) /
                                    static_cast<double>(s.support);
    if (s.support > 0) {
      p_sum += s.precision;
      r_sum += s.recall;
      ++present;
    }
    out.per_class.push_back(s);
  }
  if (averaging == Averaging::macro) {
    out.precision = p_sum / static_cast<double>(present);
    out.recall = r_sum / static_cast<double>(present);
  } else {
    // Single-label items: pooled TP/(TP+FP) and TP/(TP+FN) both reduce to
    // hits over items.
    out.precision = out.recall = static_cast<double>(hits) / static_cast<double>(items);
  }
  return out;
}

inline MetricsReport evaluate(const PredictionSet& preds, const std::set<int>& cow_classes,
                              Averaging averaging = Averaging::macro) {
  MetricsReport r;
  r.node_acc = node_accuracy(preds);
  r.node_wrong = node_wrong(preds);
  r.cow_node_solve = cow_node_solve(preds, cow_classes);
  r.edge_acc = edge_accuracy(preds);
  auto pr = precision_recall(preds, averaging);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.per_class = std::move(pr.per_class);
  return r;
}

}  // namespace vesselgcn

#endif  // VESSELGCN_EVALUATION_HPP
