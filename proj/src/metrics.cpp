#include "gfairhint/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gfairhint/error.hpp"

namespace gfairhint {

namespace {

std::vector<std::size_t> rank_by_score(const std::vector<double>& score) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&score](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  return order;
}

double dcg(const std::vector<double>& rel_in_order, std::size_t k) {
  double s = 0.0;
  std::size_t top = std::min(k, rel_in_order.size());
  for (std::size_t p = 0; p < top; ++p)
    s += (std::exp2(rel_in_order[p]) - 1.0) /
         std::log2(static_cast<double>(p) + 2.0);
  return s;
}

}  // namespace

double ndcg_at_k(const std::vector<double>& rel,
                 const std::vector<double>& score, std::size_t k) {
  if (rel.size() != score.size())
    throw ShapeError("ndcg: relevance/score length mismatch");
  if (rel.empty() || k == 0) throw ContractError("ndcg: empty candidate list");
  std::vector<double> in_outcome_order;
  in_outcome_order.reserve(rel.size());
  for (std::size_t idx : rank_by_score(score)) in_outcome_order.push_back(rel[idx]);
  std::vector<double> ideal = rel;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = dcg(ideal, k);
  if (idcg == 0.0) return 1.0;
  return dcg(in_outcome_order, k) / idcg;
}

double err_at_k(const std::vector<double>& rel,
                const std::vector<double>& score, std::size_t k) {
  if (rel.size() != score.size())
    throw ShapeError("err: relevance/score length mismatch");
  if (rel.empty() || k == 0) throw ContractError("err: empty candidate list");
  double row_max = *std::max_element(rel.begin(), rel.end());
  if (row_max <= 0.0) return 0.0;
  auto order = rank_by_score(score);
  constexpr double kGrade = 4.0;
  double err = 0.0;
  double not_stopped = 1.0;
  std::size_t top = std::min(k, rel.size());
  for (std::size_t p = 0; p < top; ++p) {
    double graded = kGrade * (rel[order[p]] / row_max);
    double r = (std::exp2(graded) - 1.0) / std::exp2(kGrade);
    err += not_stopped * r / (static_cast<double>(p) + 1.0);
    not_stopped *= 1.0 - r;
  }
  return err;
}

std::optional<double> consistency(const std::vector<int>& predicted,
                                  const OracleSimilarity& oracle) {
  if (!oracle.is_binary())
    throw ContractError("consistency needs a binary oracle");
  const auto& pairs = oracle.pairs();
  if (pairs.empty()) return std::nullopt;
  double discordant = 0.0;
  for (auto [i, j] : pairs) {
    if (i >= predicted.size() || j >= predicted.size())
      throw ContractError("consistency: prediction vector too short");
    if (predicted[i] != predicted[j]) discordant += 1.0;
  }
  return 1.0 - discordant / static_cast<double>(pairs.size());
}

double accuracy(const std::vector<int>& predicted,
                const std::vector<int>& truth,
                const std::vector<std::size_t>& mask) {
  if (mask.empty()) throw ContractError("accuracy: empty evaluation mask");
  double correct = 0.0;
  for (std::size_t i : mask) {
    if (i >= predicted.size() || i >= truth.size())
      throw ContractError("accuracy: mask index out of range");
    if (predicted[i] == truth[i]) correct += 1.0;
  }
  return correct / static_cast<double>(mask.size());
}

std::vector<double> embedding_similarity_row(const Tensor& z, std::size_t i) {
  std::size_t n = z.rows(), d = z.cols();
  std::vector<double> out(n);
  auto zi = z.row(i);
  double ni = 0.0;
  for (double v : zi) ni += v * v;
  ni = std::sqrt(ni);
  if (ni == 0.0) return out;
  for (std::size_t j = 0; j < n; ++j) {
    auto zj = z.row(j);
    double dot = 0.0, nj = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
      dot += zi[l] * zj[l];
      nj += zj[l] * zj[l];
    }
    nj = std::sqrt(nj);
    out[j] = nj == 0.0 ? 0.0 : dot / (ni * nj);
  }
  return out;
}

MetricReport evaluate_node_metrics(const Tensor& z,
                                   const std::vector<int>& predicted,
                                   const Graph& g,
                                   const OracleSimilarity& oracle,
                                   const EvalOptions& options) {
  if (z.rows() != g.n_nodes())
    throw ContractError("evaluate: embedding rows != node count");
  std::vector<std::size_t> eval_nodes;
  if (options.test_only) {
    eval_nodes = g.split_ids(SplitTag::Test);
    if (eval_nodes.empty())
      throw ContractError("evaluate: test split is empty");
  } else {
    eval_nodes.resize(g.n_nodes());
    std::iota(eval_nodes.begin(), eval_nodes.end(), 0);
  }

  MetricReport report;
  report.k = options.k;
  report.nodes_evaluated = eval_nodes.size();
  double ndcg_sum = 0.0, err_sum = 0.0;
  for (std::size_t i : eval_nodes) {
    std::vector<double> rel_full = oracle.row(i);
    std::vector<double> score_full = embedding_similarity_row(z, i);
    std::vector<double> rel, score;
    rel.reserve(rel_full.size() - 1);
    score.reserve(rel_full.size() - 1);
    for (std::size_t j = 0; j < rel_full.size(); ++j) {
      if (j == i) continue;
      rel.push_back(rel_full[j]);
      score.push_back(score_full[j]);
    }
    ndcg_sum += ndcg_at_k(rel, score, options.k);
    err_sum += err_at_k(rel, score, options.k);
  }
  report.ndcg = ndcg_sum / static_cast<double>(eval_nodes.size());
  report.err = err_sum / static_cast<double>(eval_nodes.size());

  auto test_ids = g.split_ids(SplitTag::Test);
  std::vector<std::size_t> labeled_test;
  for (std::size_t i : test_ids)
    if (g.labels()[i] >= 0) labeled_test.push_back(i);
  if (!labeled_test.empty())
    report.accuracy = accuracy(predicted, g.labels(), labeled_test);

  if (oracle.is_binary()) report.consistency = consistency(predicted, oracle);
  return report;
}

}  // namespace gfairhint
