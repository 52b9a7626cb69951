// Copyright 2026 The vesselgcn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "test_support.hpp"
#include "vesselgcn/evaluation.hpp"

namespace vesselgcn {
namespace {

using testing::MetricOracle;

GraphPrediction scan(std::vector<int> node_pred, std::vector<int> node_truth,
                     std::vector<int> edge_pred = {}, std::vector<int> edge_truth = {}) {
  return {"s", std::move(node_pred), std::move(node_truth), std::move(edge_pred),
          std::move(edge_truth)};
}

TEST(NodeAccuracy, Examples) {
  EXPECT_EQ(node_accuracy({scan({1, 2, 3}, {1, 2, 3})}), 1.0);
  EXPECT_EQ(node_accuracy({scan({1, 2, 3, 4}, {1, 2, 3, 0})}), 0.75);
  // Pooled over scans, not averaged per scan.
  EXPECT_EQ(node_accuracy({scan({1}, {1}), scan({1, 1, 1}, {0, 0, 1})}), 0.5);
  EXPECT_THROW(node_accuracy({}), ValidationError);
  EXPECT_THROW(node_accuracy({scan({1, 2}, {1})}), ValidationError);
}

TEST(EdgeAccuracy, Examples) {
  EXPECT_EQ(edge_accuracy({scan({0}, {0}, {1, 2}, {1, 2})}), 1.0);
  EXPECT_EQ(edge_accuracy({scan({0}, {0}, {1, 2, 0, 0}, {1, 2, 3, 0})}), 0.75);
  EXPECT_THROW(edge_accuracy({scan({0}, {0})}), ValidationError);
}

TEST(NodeWrong, Examples) {
  EXPECT_EQ(node_wrong({scan({1, 2}, {1, 2})}), 0.0);
  EXPECT_EQ(node_wrong({scan({0, 0, 0, 1}, {1, 1, 1, 1}), scan({5, 0}, {0, 0})}), 2.0);
  EXPECT_THROW(node_wrong({}), ValidationError);
}

TEST(CowNodeSolve, Examples) {
  const std::set<int> cow{2, 3};
  EXPECT_EQ(cow_node_solve({scan({2, 3}, {2, 3})}, cow), 1.0);
  EXPECT_EQ(cow_node_solve({scan({2, 0}, {2, 3}), scan({2, 3, 7}, {2, 3, 1})}, cow), 0.5);
  // A scan without CoW nodes counts as solved; a wrong non-CoW node is fine.
  EXPECT_EQ(cow_node_solve({scan({4, 5}, {1, 1})}, cow), 1.0);
  // Predicting a CoW class for a non-CoW node does not fail the scan.
  EXPECT_EQ(cow_node_solve({scan({2}, {1})}, cow), 1.0);
  EXPECT_THROW(cow_node_solve({scan({1}, {1})}, {}), ValidationError);
}

TEST(PrecisionRecall, Examples) {
  const auto perfect = precision_recall({scan({1, 2}, {1, 2}, {0}, {0})});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);

  // One class of interest: 2 TP, 1 FP (a 0 predicted as 1), 1 FN (a 1
  // predicted as 0).
  const auto pr = precision_recall({scan({1, 1, 1, 0}, {1, 1, 0, 1})});
  const auto one = std::find_if(pr.per_class.begin(), pr.per_class.end(),
                                [](const ClassScore& s) { return s.class_id == 1; });
  ASSERT_NE(one, pr.per_class.end());
  EXPECT_DOUBLE_EQ(one->precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(one->recall, 2.0 / 3.0);
  EXPECT_EQ(one->true_positive, 2u);
  EXPECT_EQ(one->predicted, 3u);
  EXPECT_EQ(one->support, 3u);
}

TEST(PrecisionRecall, NodeAndEdgeClassesAreSeparate) {
  const auto pr = precision_recall({scan({3}, {3}, {3}, {1})});
  ASSERT_EQ(pr.per_class.size(), 3u);
  EXPECT_EQ(pr.per_class[0].kind, ItemKind::node);
  EXPECT_EQ(pr.per_class[0].precision, 1.0);
  EXPECT_EQ(pr.per_class[1].kind, ItemKind::edge);
  EXPECT_EQ(pr.per_class[1].class_id, 1);
  EXPECT_EQ(pr.per_class[1].recall, 0.0);
  // Predicted-only classes are listed but not averaged.
  EXPECT_EQ(pr.per_class[2].class_id, 3);
  EXPECT_EQ(pr.per_class[2].support, 0u);
  EXPECT_DOUBLE_EQ(pr.precision, 0.5);
}

TEST(Metrics, MatchBruteForceOracles) {
  Rng rng(21);
  const std::set<int> cow{1, 4};
  for (int trial = 0; trial < 300; ++trial) {
    const PredictionSet preds = testing::random_prediction_set(rng);
    const MetricOracle o(preds, cow);
    EXPECT_EQ(detail::count_correct(preds, ItemKind::node),
              std::make_pair(o.node_hits, o.nodes));
    EXPECT_NEAR(node_accuracy(preds), double(o.node_hits) / o.nodes, 1e-12);
    EXPECT_NEAR(edge_accuracy(preds), double(o.edge_hits) / o.edges, 1e-12);
    EXPECT_NEAR(node_wrong(preds), double(o.nodes - o.node_hits) / o.scans, 1e-12);
    EXPECT_NEAR(cow_node_solve(preds, cow), double(o.solved) / o.scans, 1e-12);

    const auto macro = precision_recall(preds, Averaging::macro);
    EXPECT_NEAR(macro.precision, o.macro_precision(), 1e-12);
    EXPECT_NEAR(macro.recall, o.macro_recall(), 1e-12);
    const auto micro = precision_recall(preds, Averaging::micro);
    EXPECT_NEAR(micro.precision, o.micro_precision(), 1e-12);
    EXPECT_NEAR(micro.recall, o.micro_recall(), 1e-12);

    const auto rows = o.rows();
    ASSERT_EQ(macro.per_class.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const ClassScore& s = macro.per_class[i];
      EXPECT_EQ(static_cast<int>(s.kind), rows[i].kind);
      EXPECT_EQ(s.class_id, rows[i].cls);
      EXPECT_EQ(s.true_positive, rows[i].tp);
      EXPECT_EQ(s.predicted, rows[i].predicted);
      EXPECT_EQ(s.support, rows[i].support);
    }
  }
}

TEST(Metrics, Invariants) {
  Rng rng(22);
  const std::set<int> cow{0, 2};
  for (int trial = 0; trial < 200; ++trial) {
    PredictionSet preds = testing::random_prediction_set(rng);
    const MetricsReport r = evaluate(preds, cow);
    const auto [correct, total] = detail::count_correct(preds, ItemKind::node);
    EXPECT_EQ(std::llround(r.node_wrong * preds.size()), static_cast<long long>(total - correct));
    EXPECT_EQ(r.node_acc == 1.0, r.node_wrong == 0.0);
    if (r.node_acc == 1.0) {
      EXPECT_EQ(r.cow_node_solve, 1.0);
    }
    for (double v : {r.node_acc, r.edge_acc, r.cow_node_solve, r.precision, r.recall}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }

    // Reordering scans and re-indexing nodes within a scan changes nothing.
    PredictionSet shuffled = preds;
    std::reverse(shuffled.begin(), shuffled.end());
    for (auto& g : shuffled) {
      const auto perm = testing::random_permutation(rng, g.node_pred.size());
      GraphPrediction moved = g;
      for (std::size_t i = 0; i < perm.size(); ++i) {
        moved.node_pred[perm[i]] = g.node_pred[i];
        moved.node_truth[perm[i]] = g.node_truth[i];
      }
      g = moved;
    }
    const MetricsReport s = evaluate(shuffled, cow);
    EXPECT_EQ(s.node_acc, r.node_acc);
    EXPECT_EQ(s.edge_acc, r.edge_acc);
    EXPECT_EQ(s.node_wrong, r.node_wrong);
    EXPECT_EQ(s.cow_node_solve, r.cow_node_solve);
    EXPECT_NEAR(s.precision, r.precision, 1e-15);
    EXPECT_NEAR(s.recall, r.recall, 1e-15);
  }
}

TEST(Metrics, AllCorrectAndAllWrong) {
  Rng rng(23);
  const std::set<int> cow{0, 1, 2, 3, 4, 5};
  for (int trial = 0; trial < 50; ++trial) {
    PredictionSet right = testing::random_prediction_set(rng);
    PredictionSet wrong = right;
    for (auto& g : right) {
      g.node_pred = g.node_truth;
      g.edge_pred = g.edge_truth;
    }
    for (auto& g : wrong) {
      for (std::size_t i = 0; i < g.node_pred.size(); ++i) g.node_pred[i] = g.node_truth[i] + 1;
      for (std::size_t i = 0; i < g.edge_pred.size(); ++i) g.edge_pred[i] = g.edge_truth[i] + 1;
    }
    const MetricsReport a = evaluate(right, cow), b = evaluate(wrong, cow);
    EXPECT_EQ(a.node_acc, 1.0);
    EXPECT_EQ(a.edge_acc, 1.0);
    EXPECT_EQ(a.node_wrong, 0.0);
    EXPECT_EQ(a.cow_node_solve, 1.0);
    EXPECT_EQ(a.precision, 1.0);
    EXPECT_EQ(a.recall, 1.0);
    EXPECT_EQ(b.node_acc, 0.0);
    EXPECT_EQ(b.edge_acc, 0.0);
    EXPECT_EQ(b.cow_node_solve, 0.0);
    EXPECT_EQ(b.precision, 0.0);
    EXPECT_EQ(b.recall, 0.0);
  }
}

}  // namespace
}  // namespace vesselgcn
