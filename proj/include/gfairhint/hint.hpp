#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gfairhint/fairness_graph.hpp"
#include "gfairhint/tensor.hpp"

namespace gfairhint {

struct HintConfig {
  std::size_t dim = 128;  // embedding size of both predictor layers
  std::size_t epochs = 200;
  double lr = 0.001;
  double val_frac = 0.025;
  double test_frac = 0.05;
  std::uint64_t seed = 0;

  std::uint64_t fingerprint() const;
};

// Positive edges partition the fairness edge set; negatives are sampled
// non-edges, equally many as the positives they validate.
struct EdgeSplit {
  std::vector<std::pair<std::size_t, std::size_t>> train_pos;
  std::vector<std::pair<std::size_t, std::size_t>> val_pos;
  std::vector<std::pair<std::size_t, std::size_t>> test_pos;
  std::vector<std::pair<std::size_t, std::size_t>> val_neg;
  std::vector<std::pair<std::size_t, std::size_t>> test_neg;
  bool floored_to_minimum = false;  // fewer than 40 edges: counts forced to 1
};

EdgeSplit split_edges(const FairnessGraph& fg, double val_frac,
                      double test_frac, std::uint64_t seed);

// Last-layer link-predictor outputs, one row per node; immutable once
// training hands it out.
struct HintMatrix {
  Tensor values;  // n x d_hint
  std::uint64_t seed = 0;
  bool frozen = false;

  void save(const std::string& path) const;
  static HintMatrix load(const std::string& path);
};

struct HintReport {
  std::vector<double> epoch_loss;
  double val_auc = 0.0;
  double test_auc = 0.0;
  double val_accuracy = 0.0;
  double test_accuracy = 0.0;
  bool split_floored = false;
};

// sigma(<vi, vj>)
double link_prob(std::span<const double> vi, std::span<const double> vj);

// Trains the 2-layer GCN link predictor on the fairness graph with val/test
// edges masked out of message passing, then extracts hints with the full
// fairness adjacency restored. Never sees task labels by construction.
std::pair<HintMatrix, HintReport> train_hints(const Tensor& features,
                                              const FairnessGraph& fg,
                                              const HintConfig& config);

struct FairnessReport {
  double epsilon = 0.0;
  double delta = 0.0;
  bool delta_in_range = true;       // delta inside (0,1)
  bool epsilon_exceeds_delta = false;
  double edge_fraction = 0.0;       // edges with D(vi,vj) < delta
  double nonedge_fraction = 0.0;    // sampled non-edges with D > 1 - delta
  double definition1_fraction = 0.0;  // checked pairs with D <= eps/S
  std::size_t edges_checked = 0;
  std::size_t nonedges_checked = 0;
};

// D(vi,vj) = 1 - link_prob. Non-edges are enumerated exhaustively for
// n < 2000 and sampled (up to 10x the edge count) above.
FairnessReport verify_theorem(const HintMatrix& hints, const FairnessGraph& fg,
                              const OracleSimilarity& oracle, double delta,
                              std::uint64_t seed = 0);

// Rank-based AUC (average ranks on ties).
double rank_auc(const std::vector<double>& positive_scores,
                const std::vector<double>& negative_scores);

}  // namespace gfairhint
