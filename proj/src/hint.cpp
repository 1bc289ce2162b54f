#include "gfairhint/hint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "gfairhint/autodiff.hpp"
#include "gfairhint/error.hpp"
#include "gfairhint/graph.hpp"
#include "gfairhint/optim.hpp"
#include "gfairhint/rng.hpp"
#include "gfairhint/textio.hpp"

namespace gfairhint {

std::uint64_t HintConfig::fingerprint() const {
  std::uint64_t h = fnv1a("hint-config-v1");
  h = fnv1a(&dim, sizeof(dim), h);
  h = fnv1a(&epochs, sizeof(epochs), h);
  h = fnv1a(&lr, sizeof(lr), h);
  h = fnv1a(&val_frac, sizeof(val_frac), h);
  h = fnv1a(&test_frac, sizeof(test_frac), h);
  h = fnv1a(&seed, sizeof(seed), h);
  return h;
}

EdgeSplit split_edges(const FairnessGraph& fg, double val_frac,
                      double test_frac, std::uint64_t seed) {
  std::size_t m = fg.edges.size();
  if (m == 0) throw ContractError("cannot split an empty fairness graph");
  if (val_frac < 0 || test_frac < 0 || val_frac + test_frac >= 1.0)
    throw ConfigError("edge split fractions must be non-negative and sum below 1");

  EdgeSplit split;
  auto n_val = static_cast<std::size_t>(std::llround(val_frac * m));
  auto n_test = static_cast<std::size_t>(std::llround(test_frac * m));
  if (m < 40) {
    if (n_val == 0) { n_val = 1; split.floored_to_minimum = true; }
    if (n_test == 0) { n_test = 1; split.floored_to_minimum = true; }
  }
  if (n_val + n_test >= m)
    throw ContractError("fairness graph too small to hold out " +
                        std::to_string(n_val + n_test) + " of " +
                        std::to_string(m) + " edges");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, "hint-edge-split"));
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t t = 0; t < m; ++t) {
    const auto& e = fg.edges[order[t]];
    if (t < n_val) split.val_pos.push_back(e);
    else if (t < n_val + n_test) split.test_pos.push_back(e);
    else split.train_pos.push_back(e);
  }

  // negative pairs: not a fairness edge, not a self-pair, no duplicates
  std::set<std::pair<std::size_t, std::size_t>> used;
  auto sample_negatives = [&](std::size_t count) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::uniform_int_distribution<std::size_t> pick(0, fg.n_nodes - 1);
    std::size_t attempts_left = 100 * count;
    while (out.size() < count) {
      if (attempts_left-- == 0)
        throw SamplingError(
            "negative-edge sampling exhausted its attempt budget; the "
            "fairness graph is too close to complete");
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j) continue;
      auto e = std::make_pair(std::min(i, j), std::max(i, j));
      if (fg.has_edge(e.first, e.second) || used.count(e)) continue;
      used.insert(e);
      out.push_back(e);
    }
    return out;
  };
  split.val_neg = sample_negatives(split.val_pos.size());
  split.test_neg = sample_negatives(split.test_pos.size());
  return split;
}

double link_prob(std::span<const double> vi, std::span<const double> vj) {
  if (vi.size() != vj.size())
    throw ShapeError("link_prob: vector dimensions differ");
  double dot = 0.0;
  for (std::size_t l = 0; l < vi.size(); ++l) dot += vi[l] * vj[l];
  if (dot >= 0.0) return 1.0 / (1.0 + std::exp(-dot));
  double e = std::exp(dot);
  return e / (1.0 + e);
}

void HintMatrix::save(const std::string& path) const {
  auto out = open_for_write(path);
  out << values.rows() << ' ' << values.cols() << ' ' << seed << '\n';
  for (std::size_t i = 0; i < values.rows(); ++i) {
    auto row = values.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ' ';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

HintMatrix HintMatrix::load(const std::string& path) {
  auto lines = read_data_lines(path);
  if (lines.empty()) throw IngestError(path + ": missing hint header");
  auto header = split_fields(lines[0]);
  if (header.size() != 3)
    throw IngestError(path + ": header must be 'n d_hint seed'");
  std::size_t n = parse_u64(header[0], path);
  std::size_t d = parse_u64(header[1], path);
  HintMatrix h;
  h.seed = parse_u64(header[2], path);
  if (lines.size() != n + 1)
    throw IngestError(path + ": expected " + std::to_string(n) + " hint rows");
  h.values = Tensor({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto f = split_fields(lines[i + 1]);
    if (f.size() != d)
      throw IngestError(path + ": hint row " + std::to_string(i) +
                        " has wrong width");
    for (std::size_t j = 0; j < d; ++j)
      h.values(i, j) = parse_double(f[j], path);
  }
  h.values.validate_finite(path);
  h.frozen = true;
  return h;
}

double rank_auc(const std::vector<double>& positive_scores,
                const std::vector<double>& negative_scores) {
  if (positive_scores.empty() || negative_scores.empty())
    throw ContractError("auc needs both positive and negative scores");
  struct Entry { double score; bool positive; };
  std::vector<Entry> all;
  all.reserve(positive_scores.size() + negative_scores.size());
  for (double s : positive_scores) all.push_back({s, true});
  for (double s : negative_scores) all.push_back({s, false});
  std::sort(all.begin(), all.end(),
            [](const Entry& a, const Entry& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (all[t].positive) rank_sum += avg_rank;
    i = j;
  }
  double p = static_cast<double>(positive_scores.size());
  double q = static_cast<double>(negative_scores.size());
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

namespace {

struct PairColumns {
  std::vector<std::size_t> i, j;
};

PairColumns to_columns(const std::vector<std::pair<std::size_t, std::size_t>>& a,
                       const std::vector<std::pair<std::size_t, std::size_t>>& b) {
  PairColumns c;
  c.i.reserve(a.size() + b.size());
  c.j.reserve(a.size() + b.size());
  for (auto [x, y] : a) { c.i.push_back(x); c.j.push_back(y); }
  for (auto [x, y] : b) { c.i.push_back(x); c.j.push_back(y); }
  return c;
}

std::vector<double> pair_probs(const Tensor& z,
                               const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) out.push_back(link_prob(z.row(i), z.row(j)));
  return out;
}

}  // namespace

std::pair<HintMatrix, HintReport> train_hints(const Tensor& features,
                                              const FairnessGraph& fg,
                                              const HintConfig& config) {
  std::size_t n = fg.n_nodes;
  if (features.rows() != n)
    throw ContractError("hint training: feature rows != fairness graph nodes");
  std::size_t d_in = features.cols();
  if (d_in == 0) throw ContractError("hint training: empty feature matrix");
  if (config.dim == 0) throw ConfigError("hint dimension must be positive");

  EdgeSplit split =
      split_edges(fg, config.val_frac, config.test_frac, config.seed);
  CsrMatrix train_adj = normalized_adjacency_csr(n, split.train_pos);
  CsrMatrix full_adj = normalized_adjacency_csr(n, fg.edges);

  std::mt19937_64 init_rng(derive_seed(config.seed, "hint-init"));
  Parameter w0("hint.w0", glorot_uniform(d_in, config.dim, init_rng));
  Parameter w1("hint.w1", glorot_uniform(config.dim, config.dim, init_rng));
  w0.adam.cfg.lr = config.lr;
  w1.adam.cfg.lr = config.lr;

  auto forward = [&](Tape& tape, const CsrMatrix& adj) {
    Var x = tape.input(features);
    Var v0 = tape.param(w0.value);
    Var v1 = tape.param(w1.value);
    Var h = relu(matmul(spmm(adj, x), v0));
    Var z = matmul(spmm(adj, h), v1);
    return std::tuple(z, v0, v1);
  };

  HintReport report;
  report.split_floored = split.floored_to_minimum;
  report.epoch_loss.reserve(config.epochs);

  std::mt19937_64 neg_rng(derive_seed(config.seed, "hint-train-neg"));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // fresh 1:1 negatives each epoch; duplicates tolerated, fairness edges not
    std::vector<std::pair<std::size_t, std::size_t>> negatives;
    negatives.reserve(split.train_pos.size());
    std::size_t attempts_left = 100 * split.train_pos.size();
    while (negatives.size() < split.train_pos.size()) {
      if (attempts_left-- == 0)
        throw SamplingError("training negative sampling exhausted its budget");
      std::size_t i = pick(neg_rng), j = pick(neg_rng);
      if (i == j || fg.has_edge(i, j)) continue;
      negatives.emplace_back(i, j);
    }

    Tape tape;
    auto [z, v0, v1] = forward(tape, train_adj);
    PairColumns cols = to_columns(split.train_pos, negatives);
    std::vector<double> targets(split.train_pos.size(), 1.0);
    targets.resize(cols.i.size(), 0.0);
    try {
      Var probs = sigmoid(pair_dot(z, cols.i, cols.j));
      Var loss = bce_mean(probs, targets);
      report.epoch_loss.push_back(loss.value().item());
      tape.backward(loss);
      w0.apply(v0.grad());
      w1.apply(v1.grad());
    } catch (const NumericError& e) {
      throw NumericError("hint training diverged at epoch " +
                         std::to_string(epoch) + ": " + e.what());
    }
  }

  // link-prediction quality, measured on the graph the model was trained on
  {
    Tape tape;
    auto [z, v0, v1] = forward(tape, train_adj);
    const Tensor& zv = z.value();
    auto score_block = [&](const auto& pos, const auto& neg, double& auc,
                           double& acc) {
      std::vector<double> ps = pair_probs(zv, pos);
      std::vector<double> ns = pair_probs(zv, neg);
      auc = rank_auc(ps, ns);
      double correct = 0.0;
      for (double p : ps) correct += p > 0.5 ? 1.0 : 0.0;
      for (double p : ns) correct += p <= 0.5 ? 1.0 : 0.0;
      acc = correct / static_cast<double>(ps.size() + ns.size());
    };
    score_block(split.val_pos, split.val_neg, report.val_auc,
                report.val_accuracy);
    score_block(split.test_pos, split.test_neg, report.test_auc,
                report.test_accuracy);
  }

  // extraction restores the complete fairness adjacency
  HintMatrix hints;
  {
    Tape tape;
    auto [z, v0, v1] = forward(tape, full_adj);
    hints.values = z.value();
  }
  hints.seed = config.seed;
  hints.frozen = true;
  return {std::move(hints), std::move(report)};
}

FairnessReport verify_theorem(const HintMatrix& hints, const FairnessGraph& fg,
                              const OracleSimilarity& oracle, double delta,
                              std::uint64_t seed) {
  if (hints.values.rows() != fg.n_nodes)
    throw ContractError("verify: hint rows != fairness graph nodes");
  std::size_t n = fg.n_nodes;

  FairnessReport rep;
  rep.delta = delta;
  rep.delta_in_range = delta > 0.0 && delta < 1.0;
  rep.epsilon = implied_epsilon(fg, oracle);
  rep.epsilon_exceeds_delta = rep.epsilon > delta;

  auto distance = [&](std::size_t i, std::size_t j) {
    return 1.0 - link_prob(hints.values.row(i), hints.values.row(j));
  };

  std::size_t def1_total = 0, def1_ok = 0;
  auto check_def1 = [&](std::size_t i, std::size_t j, double d) {
    double s = oracle.value(i, j);
    ++def1_total;
    if (s <= 0.0 || d <= rep.epsilon / s) ++def1_ok;
  };

  std::size_t edge_ok = 0;
  for (auto [i, j] : fg.edges) {
    double d = distance(i, j);
    if (d < delta) ++edge_ok;
    check_def1(i, j, d);
  }
  rep.edges_checked = fg.edges.size();
  rep.edge_fraction = fg.edges.empty()
                          ? 0.0
                          : static_cast<double>(edge_ok) /
                                static_cast<double>(fg.edges.size());

  std::size_t nonedge_ok = 0, nonedge_total = 0;
  if (n < 2000) {
    auto nbrs = fg.neighbor_lists();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& ni = nbrs[i];
      auto it = ni.begin();
      for (std::size_t j = i + 1; j < n; ++j) {
        while (it != ni.end() && *it < j) ++it;
        if (it != ni.end() && *it == j) continue;
        double d = distance(i, j);
        ++nonedge_total;
        if (d > 1.0 - delta) ++nonedge_ok;
        check_def1(i, j, d);
      }
    }
  } else {
    std::size_t all_pairs = n * (n - 1) / 2;
    std::size_t want = std::min(10 * fg.edges.size(), all_pairs);
    std::mt19937_64 rng(derive_seed(seed, "theorem-nonedges"));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t attempts_left = 100 * want + 100;
    while (nonedge_total < want && attempts_left-- > 0) {
      std::size_t i = pick(rng), j = pick(rng);
      if (i == j || fg.has_edge(i, j)) continue;
      double d = distance(i, j);
      ++nonedge_total;
      if (d > 1.0 - delta) ++nonedge_ok;
      check_def1(i, j, d);
    }
  }
  rep.nonedges_checked = nonedge_total;
  rep.nonedge_fraction = nonedge_total == 0
                             ? 0.0
                             : static_cast<double>(nonedge_ok) /
                                   static_cast<double>(nonedge_total);
  rep.definition1_fraction =
      def1_total == 0
          ? 0.0
          : static_cast<double>(def1_ok) / static_cast<double>(def1_total);
  return rep;
}

}  // namespace gfairhint
