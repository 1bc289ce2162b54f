#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gfairhint/fairness_graph.hpp"
#include "gfairhint/graph.hpp"
#include "gfairhint/tensor.hpp"

namespace gfairhint {

// Ranking metrics over one node's candidate list. rel holds graded oracle
// relevances, score the outcome similarities; entries are parallel and the
// anchor node itself must already be excluded. Ordering ties break by lower
// candidate index.

// DCG uses (2^rel - 1)/log2(p+1); an all-zero rel row scores 1.0 since any
// ordering is ideal.
double ndcg_at_k(const std::vector<double>& rel,
                 const std::vector<double>& score, std::size_t k);

// Graded relevances are normalized by the row max onto grade scale g=4:
// stop probability R = (2^{4 rel'} - 1)/2^4.
double err_at_k(const std::vector<double>& rel,
                const std::vector<double>& score, std::size_t k);

// Fraction of annotated-similar pairs whose predictions agree; absent when
// the oracle has no pairs. Uses predictions for both endpoints.
std::optional<double> consistency(const std::vector<int>& predicted,
                                  const OracleSimilarity& oracle);

double accuracy(const std::vector<int>& predicted,
                const std::vector<int>& truth,
                const std::vector<std::size_t>& mask);

struct MetricReport {
  double accuracy = 0.0;
  double ndcg = 0.0;
  double err = 0.0;
  std::optional<double> consistency;
  std::size_t k = 0;
  std::size_t nodes_evaluated = 0;
};

struct EvalOptions {
  std::size_t k = 10;
  bool test_only = true;  // false: rank for every node
};

// Cosine similarity between embedding rows; zero-norm rows score 0 against
// everything.
std::vector<double> embedding_similarity_row(const Tensor& z, std::size_t i);

// Ranks each evaluated node's candidate list (all other nodes) by embedding
// similarity against the oracle relevances; accuracy over the test split.
MetricReport evaluate_node_metrics(const Tensor& z,
                                   const std::vector<int>& predicted,
                                   const Graph& g,
                                   const OracleSimilarity& oracle,
                                   const EvalOptions& options);

struct ImportanceReport {
  double score_u = 0.0;
  std::optional<double> score_hint;
  std::optional<double> ratio;  // score_u / score_hint when defined
};

}  // namespace gfairhint
