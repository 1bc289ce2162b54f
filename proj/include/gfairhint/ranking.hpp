#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gfairhint/autodiff.hpp"
#include "gfairhint/fairness_graph.hpp"
#include "gfairhint/tensor.hpp"

namespace gfairhint {

enum class RankMetric { Ndcg, Err };
enum class PairMode { Cross, Union, All };
enum class OutcomeSim { Cosine, Inner };
enum class LossNorm { MeanNodes, Sum };

const char* rank_metric_name(RankMetric m);
RankMetric parse_rank_metric(const std::string& s);
const char* pair_mode_name(PairMode m);
PairMode parse_pair_mode(const std::string& s);
const char* outcome_sim_name(OutcomeSim s);
OutcomeSim parse_outcome_sim(const std::string& s);
const char* loss_norm_name(LossNorm n);
LossNorm parse_loss_norm(const std::string& s);

struct RankingConfig {
  std::size_t k = 10;
  RankMetric metric = RankMetric::Ndcg;
  PairMode pair_mode = PairMode::Cross;  // oracle top-k x outcome top-k
  OutcomeSim outcome = OutcomeSim::Cosine;
  LossNorm normalization = LossNorm::MeanNodes;
};

// sigma(s_hat_ij - s_hat_im); the printed reciprocal form is not a
// probability, so the standard logistic is used.
double pairwise_prob(double s_hat_ij, double s_hat_im);

// Strict three-way comparison label in {1, 0.5, 0}.
double pairwise_label(double s_ij, double s_im);

// Frozen per-node ranking context over candidate slots (the anchor is
// already excluded; slot order is the caller's candidate order).
struct RankContext {
  std::vector<double> rel;          // oracle relevance per slot
  std::vector<std::size_t> order;   // slots by (outcome desc, slot asc)
  std::vector<std::size_t> pos;     // inverse permutation of order
  std::vector<double> rel_in_order; // rel[order[p]] for err recomputes
  double idcg = 0.0;                // ideal top-k dcg, 0 when rel is all zero
  double row_max = 0.0;             // err grade normalizer
  std::size_t k = 0;
};

RankContext make_rank_context(const std::vector<double>& rel,
                              const std::vector<double>& outcome,
                              std::size_t k);

// |metric@k change| when slots j and m trade ranking positions; zero when
// both sit outside the top-k window. Lambda weights are constants during
// backprop.
double lambda_weight(const RankContext& ctx, std::size_t j_slot,
                     std::size_t m_slot, RankMetric metric);

struct RankingPair {
  std::size_t j = 0;  // node ids, not slots
  std::size_t m = 0;
  double label = 0.5;
  double weight = 0.0;
};

struct NodePlan {
  std::size_t anchor = 0;
  std::vector<RankingPair> pairs;  // materialized (cross/union modes)
  // all-pairs mode streams candidate pairs instead of materializing them
  bool streaming = false;
  std::vector<std::size_t> cand;  // candidate node ids (streaming)
  RankContext ctx;                // frozen ranking data (streaming)
};

// Per-epoch snapshot: pair choices, labels, and lambda weights frozen from
// the current embeddings; the loss recomputes outcome similarities from the
// live tensor so gradients stay exact under the frozen weights.
struct RankingPlan {
  RankingConfig config;
  std::vector<NodePlan> nodes;
  std::size_t n_nodes = 0;        // normalization denominator
  std::size_t skipped_nodes = 0;  // fewer than two candidates
  std::size_t total_pairs() const;
};

RankingPlan build_ranking_plan(const Tensor& z, const OracleSimilarity& oracle,
                               const RankingConfig& config);

// L_fairness as one fused tape op: pairwise cross-entropy of P-hat against
// the oracle label, weighted by the plan's lambda weights.
Var ranking_fairness_loss(Var z, const RankingPlan& plan);

// Detached single-node loss (diagnostics and hand-case tests).
double node_fairness_loss(const Tensor& z, std::size_t anchor,
                          const OracleSimilarity& oracle,
                          const RankingConfig& config);

}  // namespace gfairhint
