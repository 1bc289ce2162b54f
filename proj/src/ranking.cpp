#include "gfairhint/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "gfairhint/error.hpp"

namespace gfairhint {

const char* rank_metric_name(RankMetric m) {
  return m == RankMetric::Ndcg ? "ndcg" : "err";
}

RankMetric parse_rank_metric(const std::string& s) {
  if (s == "ndcg") return RankMetric::Ndcg;
  if (s == "err") return RankMetric::Err;
  throw ConfigError("unknown ranking metric '" + s + "'");
}

const char* pair_mode_name(PairMode m) {
  switch (m) {
    case PairMode::Cross: return "cross";
    case PairMode::Union: return "union";
    case PairMode::All: return "all";
  }
  return "?";
}

PairMode parse_pair_mode(const std::string& s) {
  if (s == "cross") return PairMode::Cross;
  if (s == "union") return PairMode::Union;
  if (s == "all") return PairMode::All;
  throw ConfigError("unknown pair mode '" + s + "'");
}

const char* outcome_sim_name(OutcomeSim s) {
  return s == OutcomeSim::Cosine ? "cosine" : "inner";
}

OutcomeSim parse_outcome_sim(const std::string& s) {
  if (s == "cosine") return OutcomeSim::Cosine;
  if (s == "inner") return OutcomeSim::Inner;
  throw ConfigError("unknown outcome similarity '" + s + "'");
}

const char* loss_norm_name(LossNorm n) {
  return n == LossNorm::MeanNodes ? "mean" : "sum";
}

LossNorm parse_loss_norm(const std::string& s) {
  if (s == "mean") return LossNorm::MeanNodes;
  if (s == "sum") return LossNorm::Sum;
  throw ConfigError("unknown loss normalization '" + s + "'");
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// cross-entropy of sigmoid(diff) against label, in a form that never logs 0
double pair_ce(double diff, double label) {
  return softplus(-diff) + (1.0 - label) * diff;
}

double discount(std::size_t p, std::size_t k) {
  if (p >= k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(p) + 2.0);
}

double err_of_window(const std::vector<double>& rel_in_order, double row_max) {
  double err = 0.0, not_stopped = 1.0;
  for (std::size_t p = 0; p < rel_in_order.size(); ++p) {
    double r = (std::exp2(4.0 * rel_in_order[p] / row_max) - 1.0) / 16.0;
    err += not_stopped * r / (static_cast<double>(p) + 1.0);
    not_stopped *= 1.0 - r;
  }
  return err;
}

}  // namespace

double pairwise_prob(double s_hat_ij, double s_hat_im) {
  return stable_sigmoid(s_hat_ij - s_hat_im);
}

double pairwise_label(double s_ij, double s_im) {
  if (s_ij > s_im) return 1.0;
  if (s_ij < s_im) return 0.0;
  return 0.5;
}

RankContext make_rank_context(const std::vector<double>& rel,
                              const std::vector<double>& outcome,
                              std::size_t k) {
  if (rel.size() != outcome.size())
    throw ShapeError("rank context: relevance/outcome length mismatch");
  if (k == 0) throw ContractError("rank context: k must be positive");
  RankContext ctx;
  ctx.rel = rel;
  ctx.k = std::min(k, rel.size());

  ctx.order.resize(rel.size());
  std::iota(ctx.order.begin(), ctx.order.end(), 0);
  std::sort(ctx.order.begin(), ctx.order.end(),
            [&outcome](std::size_t a, std::size_t b) {
              if (outcome[a] != outcome[b]) return outcome[a] > outcome[b];
              return a < b;
            });
  ctx.pos.resize(rel.size());
  for (std::size_t p = 0; p < ctx.order.size(); ++p) ctx.pos[ctx.order[p]] = p;
  ctx.rel_in_order.reserve(ctx.k);
  for (std::size_t p = 0; p < ctx.k; ++p)
    ctx.rel_in_order.push_back(rel[ctx.order[p]]);

  std::vector<double> ideal = rel;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  for (std::size_t p = 0; p < ctx.k; ++p)
    ctx.idcg += (std::exp2(ideal[p]) - 1.0) * discount(p, ctx.k);
  ctx.row_max = rel.empty() ? 0.0 : *std::max_element(rel.begin(), rel.end());
  return ctx;
}

double lambda_weight(const RankContext& ctx, std::size_t j_slot,
                     std::size_t m_slot, RankMetric metric) {
  std::size_t pj = ctx.pos[j_slot], pm = ctx.pos[m_slot];
  if (pj >= ctx.k && pm >= ctx.k) return 0.0;
  if (ctx.rel[j_slot] == ctx.rel[m_slot]) return 0.0;

  if (metric == RankMetric::Ndcg) {
    if (ctx.idcg == 0.0) return 0.0;
    double gain = std::exp2(ctx.rel[j_slot]) - std::exp2(ctx.rel[m_slot]);
    double disc = discount(pj, ctx.k) - discount(pm, ctx.k);
    return std::fabs(gain * disc) / ctx.idcg;
  }

  if (ctx.row_max <= 0.0) return 0.0;
  std::vector<double> swapped = ctx.rel_in_order;
  if (pj < ctx.k) swapped[pj] = ctx.rel[m_slot];
  if (pm < ctx.k) swapped[pm] = ctx.rel[j_slot];
  return std::fabs(err_of_window(ctx.rel_in_order, ctx.row_max) -
                   err_of_window(swapped, ctx.row_max));
}

std::size_t RankingPlan::total_pairs() const {
  std::size_t total = 0;
  for (const auto& np : nodes) {
    if (np.streaming)
      total += np.cand.size() * (np.cand.size() - 1);
    else
      total += np.pairs.size();
  }
  return total;
}

namespace {

std::vector<double> row_norms(const Tensor& z) {
  std::vector<double> norms(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double s = 0.0;
    for (double v : z.row(i)) s += v * v;
    norms[i] = std::sqrt(s);
  }
  return norms;
}

double row_dot(const Tensor& z, std::size_t a, std::size_t b) {
  auto ra = z.row(a), rb = z.row(b);
  double s = 0.0;
  for (std::size_t l = 0; l < ra.size(); ++l) s += ra[l] * rb[l];
  return s;
}

double outcome_value(const Tensor& z, const std::vector<double>& norms,
                     std::size_t a, std::size_t b, OutcomeSim sim) {
  double dot = row_dot(z, a, b);
  if (sim == OutcomeSim::Inner) return dot;
  double nn = norms[a] * norms[b];
  return nn == 0.0 ? 0.0 : dot / nn;
}

// top slots by (value desc, slot asc)
std::vector<std::size_t> top_slots(const std::vector<double>& value,
                                   std::size_t k) {
  std::vector<std::size_t> slots(value.size());
  std::iota(slots.begin(), slots.end(), 0);
  auto cmp = [&value](std::size_t a, std::size_t b) {
    if (value[a] != value[b]) return value[a] > value[b];
    return a < b;
  };
  std::partial_sort(slots.begin(), slots.begin() + std::min(k, slots.size()),
                    slots.end(), cmp);
  slots.resize(std::min(k, slots.size()));
  return slots;
}

// Shared pair enumeration; fn(j_slot, m_slot, label, weight) for pairs with
// nonzero weight.
template <typename Fn>
void for_each_pair(const NodePlan& np, RankMetric metric, Fn&& fn) {
  if (!np.streaming) {
    for (const auto& p : np.pairs) fn(p.j, p.m, p.label, p.weight);
    return;
  }
  std::size_t c = np.cand.size();
  for (std::size_t a = 0; a < c; ++a)
    for (std::size_t b = 0; b < c; ++b) {
      if (a == b) continue;
      double w = lambda_weight(np.ctx, a, b, metric);
      if (w == 0.0) continue;
      fn(np.cand[a], np.cand[b],
         pairwise_label(np.ctx.rel[a], np.ctx.rel[b]), w);
    }
}

}  // namespace

RankingPlan build_ranking_plan(const Tensor& z, const OracleSimilarity& oracle,
                               const RankingConfig& config) {
  std::size_t n = z.rows();
  if (n != oracle.n())
    throw ContractError("ranking plan: embedding rows != oracle nodes");
  if (config.k == 0) throw ConfigError("ranking k must be positive");
  z.validate_finite("ranking plan embeddings");

  RankingPlan plan;
  plan.config = config;
  plan.n_nodes = n;

  auto norms = row_norms(z);
  for (std::size_t i = 0; i < n; ++i) {
    if (n < 3) {  // fewer than 2 candidates
      ++plan.skipped_nodes;
      continue;
    }
    std::vector<double> oracle_row = oracle.row(i);
    std::vector<std::size_t> ids;
    std::vector<double> rel, outcome;
    ids.reserve(n - 1);
    rel.reserve(n - 1);
    outcome.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      ids.push_back(j);
      rel.push_back(oracle_row[j]);
      outcome.push_back(outcome_value(z, norms, i, j, config.outcome));
    }

    NodePlan np;
    np.anchor = i;
    std::size_t k_eff = std::min(config.k, ids.size());
    np.ctx = make_rank_context(rel, outcome, k_eff);

    if (config.pair_mode == PairMode::All) {
      np.streaming = true;
      np.cand = std::move(ids);
      plan.nodes.push_back(std::move(np));
      continue;
    }

    std::vector<std::size_t> oracle_top = top_slots(rel, k_eff);
    const std::vector<std::size_t>& outcome_order = np.ctx.order;
    std::vector<std::size_t> outcome_top(
        outcome_order.begin(), outcome_order.begin() + k_eff);

    auto add_pair = [&](std::size_t a, std::size_t b) {
      if (a == b) return;
      double w = lambda_weight(np.ctx, a, b, config.metric);
      if (w == 0.0) return;
      np.pairs.push_back(
          {ids[a], ids[b], pairwise_label(rel[a], rel[b]), w});
    };
    if (config.pair_mode == PairMode::Cross) {
      for (std::size_t a : oracle_top)
        for (std::size_t b : outcome_top) add_pair(a, b);
    } else {
      std::vector<std::size_t> pool = oracle_top;
      pool.insert(pool.end(), outcome_top.begin(), outcome_top.end());
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
      for (std::size_t a : pool)
        for (std::size_t b : pool) add_pair(a, b);
    }
    if (!np.pairs.empty()) plan.nodes.push_back(std::move(np));
  }
  return plan;
}

namespace {

struct PairGrad {
  // d s_hat(i,j) / d z_i and / d z_j accumulate through these coefficients:
  // inner product uses the raw rows; cosine corrects by the row norms.
  const Tensor& z;
  const std::vector<double>& norms;
  OutcomeSim sim;

  double value(std::size_t a, std::size_t b) const {
    return outcome_value(z, norms, a, b, sim);
  }

  // adds g * d s_hat(a,b)/d z into rows a and b of grad
  void accumulate(Tensor& grad, std::size_t a, std::size_t b, double g) const {
    std::size_t d = z.cols();
    auto za = z.row(a), zb = z.row(b);
    if (sim == OutcomeSim::Inner) {
      for (std::size_t l = 0; l < d; ++l) {
        grad(a, l) += g * zb[l];
        grad(b, l) += g * za[l];
      }
      return;
    }
    double nn = norms[a] * norms[b];
    if (nn == 0.0) return;  // zero-norm rows pin the similarity at 0
    double s = row_dot(z, a, b) / nn;
    double na2 = norms[a] * norms[a], nb2 = norms[b] * norms[b];
    for (std::size_t l = 0; l < d; ++l) {
      grad(a, l) += g * (zb[l] / nn - s * za[l] / na2);
      grad(b, l) += g * (za[l] / nn - s * zb[l] / nb2);
    }
  }
};

}  // namespace

Var ranking_fairness_loss(Var z, const RankingPlan& plan) {
  Tape& tape = *z.tape;
  const Tensor& zv = z.value();
  if (zv.rows() != plan.n_nodes)
    throw ContractError("ranking loss: embedding rows changed since the plan");
  double denom = plan.config.normalization == LossNorm::MeanNodes
                     ? static_cast<double>(plan.n_nodes)
                     : 1.0;

  auto norms = row_norms(zv);
  PairGrad pg{zv, norms, plan.config.outcome};
  double total = 0.0;
  for (const NodePlan& np : plan.nodes) {
    double node_loss = 0.0;
    for_each_pair(np, plan.config.metric,
                  [&](std::size_t jid, std::size_t mid, double label,
                      double weight) {
                    double diff =
                        pg.value(np.anchor, jid) - pg.value(np.anchor, mid);
                    node_loss += weight * pair_ce(diff, label);
                  });
    total += node_loss;
  }

  // the plan must outlive the tape, like spmm's matrix operand
  const RankingPlan* plan_ptr = &plan;
  std::size_t z_id = z.id;
  return tape.emit(
      Tensor::scalar(total / denom), {z.id},
      [plan_ptr, z_id, denom](Tape& t, std::size_t out_id) {
        double gout = t.grad_slot(out_id).item() / denom;
        if (gout == 0.0) return;
        const Tensor& zval = t.value(z_id);
        auto bnorms = row_norms(zval);
        PairGrad bpg{zval, bnorms, plan_ptr->config.outcome};
        Tensor& gz = t.grad_slot(z_id);
        for (const NodePlan& np : plan_ptr->nodes) {
          for_each_pair(
              np, plan_ptr->config.metric,
              [&](std::size_t jid, std::size_t mid, double label,
                  double weight) {
                double sij = bpg.value(np.anchor, jid);
                double sim = bpg.value(np.anchor, mid);
                double g = gout * weight *
                           (stable_sigmoid(sij - sim) - label);
                bpg.accumulate(gz, np.anchor, jid, g);
                bpg.accumulate(gz, np.anchor, mid, -g);
              });
        }
      });
}

double node_fairness_loss(const Tensor& z, std::size_t anchor,
                          const OracleSimilarity& oracle,
                          const RankingConfig& config) {
  RankingPlan plan = build_ranking_plan(z, oracle, config);
  auto norms = row_norms(z);
  PairGrad pg{z, norms, config.outcome};
  for (const NodePlan& np : plan.nodes) {
    if (np.anchor != anchor) continue;
    double node_loss = 0.0;
    for_each_pair(np, config.metric,
                  [&](std::size_t jid, std::size_t mid, double label,
                      double weight) {
                    double diff =
                        pg.value(np.anchor, jid) - pg.value(np.anchor, mid);
                    node_loss += weight * pair_ce(diff, label);
                  });
    return node_loss;
  }
  return 0.0;
}

}  // namespace gfairhint
