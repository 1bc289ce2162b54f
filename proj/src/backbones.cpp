#include "gfairhint/backbones.hpp"

#include <algorithm>
#include <cmath>

#include "gfairhint/error.hpp"
#include "gfairhint/rng.hpp"

namespace gfairhint {

const char* architecture_name(Architecture a) {
  switch (a) {
    case Architecture::Gcn: return "gcn";
    case Architecture::Sage: return "sage";
    case Architecture::Gat: return "gat";
  }
  return "?";
}

Architecture parse_architecture(const std::string& s) {
  if (s == "gcn") return Architecture::Gcn;
  if (s == "sage") return Architecture::Sage;
  if (s == "gat") return Architecture::Gat;
  throw ConfigError("unknown architecture '" + s + "'");
}

namespace {

Var apply_nonlinearity(Var h, Nonlinearity nl) {
  return nl == Nonlinearity::Relu ? relu(h) : h;
}

Tensor glorot_vector(std::size_t len, std::size_t fan, std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / (static_cast<double>(fan) + 1.0));
  std::uniform_real_distribution<double> u(-bound, bound);
  Tensor t({len});
  auto data = t.mutable_data();
  for (auto& v : data) v = u(rng);
  return t;
}

}  // namespace

Backbone::Backbone(BackboneConfig cfg, std::size_t in_dim)
    : cfg_(cfg), in_dim_(in_dim) {
  if (cfg_.n_layers == 0) throw ConfigError("backbone needs at least 1 layer");
  if (cfg_.hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  if (in_dim_ == 0) throw ConfigError("input feature dim must be positive");
  if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0)
    throw ConfigError("dropout rate must be in [0, 1)");
  bool gat = cfg_.architecture == Architecture::Gat;
  if (gat) {
    if (cfg_.heads == 0) throw ConfigError("gat needs at least 1 head");
    if (cfg_.hidden_dim % cfg_.heads != 0)
      throw ConfigError("hidden_dim " + std::to_string(cfg_.hidden_dim) +
                        " is not divisible by " + std::to_string(cfg_.heads) +
                        " heads");
  }

  std::mt19937_64 rng(derive_seed(cfg_.seed, "backbone-init"));
  std::string prefix = architecture_name(cfg_.architecture);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    std::size_t d_in = l == 0 ? in_dim_ : cfg_.hidden_dim;
    bool last = l + 1 == cfg_.n_layers;
    std::size_t d_out = last ? out_dim() : cfg_.hidden_dim;
    std::string base = prefix + ".l" + std::to_string(l);
    switch (cfg_.architecture) {
      case Architecture::Gcn:
        params_.emplace_back(base + ".w", glorot_uniform(d_in, d_out, rng));
        break;
      case Architecture::Sage:
        params_.emplace_back(base + ".self", glorot_uniform(d_in, d_out, rng));
        params_.emplace_back(base + ".neigh",
                             glorot_uniform(d_in, d_out, rng));
        break;
      case Architecture::Gat: {
        // last layer: full-width heads, averaged; hidden layers: concatenated
        std::size_t dh = last ? d_out : cfg_.hidden_dim / cfg_.heads;
        std::size_t width = cfg_.heads * dh;
        params_.emplace_back(base + ".w", glorot_uniform(d_in, width, rng));
        params_.emplace_back(base + ".a_center", glorot_vector(width, dh, rng));
        params_.emplace_back(base + ".a_nbr", glorot_vector(width, dh, rng));
        break;
      }
    }
  }
}

Var Backbone::layer(Tape& tape, const Graph& g, Var h, std::size_t l,
                    const std::vector<Var>& w, std::size_t* cursor) {
  switch (cfg_.architecture) {
    case Architecture::Gcn: {
      Var weight = w[(*cursor)++];
      return matmul(spmm(g.normalized_adjacency(), h), weight);
    }
    case Architecture::Sage: {
      Var w_self = w[(*cursor)++];
      Var w_neigh = w[(*cursor)++];
      Var self_part = matmul(h, w_self);
      Var neigh_part = matmul(spmm(g.mean_adjacency(), h), w_neigh);
      return add(self_part, neigh_part);
    }
    case Architecture::Gat: {
      Var weight = w[(*cursor)++];
      Var a_center = w[(*cursor)++];
      Var a_nbr = w[(*cursor)++];

      AttentionRecord rec;
      auto nbrs = g.neighbor_lists();
      rec.seg_indptr.assign(1, 0);
      for (std::size_t i = 0; i < g.n_nodes(); ++i) {
        auto& ni = nbrs[i];
        auto with_self = ni;
        with_self.insert(
            std::lower_bound(with_self.begin(), with_self.end(), i), i);
        for (std::size_t u : with_self) {
          rec.nbr.push_back(u);
          rec.center.push_back(i);
        }
        rec.seg_indptr.push_back(rec.nbr.size());
      }

      Var xw = matmul(h, weight);
      Var sc = block_dot(xw, a_center, cfg_.heads);
      Var sn = block_dot(xw, a_nbr, cfg_.heads);
      Var e = leaky_relu(gather_pair_sum(sn, sc, rec.nbr, rec.center), 0.2);
      Var alpha = segment_softmax(e, rec.seg_indptr);
      Var agg = attention_aggregate(alpha, xw, rec.nbr, rec.seg_indptr,
                                    cfg_.heads);
      rec.alpha = alpha.value();
      attention_.push_back(std::move(rec));

      (void)tape;
      bool last = l + 1 == cfg_.n_layers;
      return last ? block_mean(agg, cfg_.heads) : agg;
    }
  }
  throw ContractError("unreachable architecture");
}

Var Backbone::forward_with(Tape& tape, const Graph& g,
                           const std::vector<Var>& weights, bool training,
                           std::mt19937_64* dropout_rng) {
  if (weights.size() != params_.size())
    throw ContractError("backbone forward: expected " +
                        std::to_string(params_.size()) + " weight vars, got " +
                        std::to_string(weights.size()));
  if (g.features().cols() != in_dim_)
    throw ConfigError("graph feature dim " +
                      std::to_string(g.features().cols()) +
                      " does not match backbone input dim " +
                      std::to_string(in_dim_));
  bool dropping = training && cfg_.dropout > 0.0;
  if (dropping && dropout_rng == nullptr)
    throw ContractError("training with dropout needs an rng");

  attention_.clear();
  Var h = tape.input(g.features());
  std::size_t cursor = 0;
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    if (dropping) h = dropout(h, cfg_.dropout, *dropout_rng, training);
    Var in = h;
    h = layer(tape, g, h, l, weights, &cursor);
    bool last = l + 1 == cfg_.n_layers;
    if (!last) h = apply_nonlinearity(h, cfg_.nonlinearity);
    if (cfg_.residual && in.value().same_shape(h.value())) h = add(h, in);
  }
  return h;
}

Backbone::BoundForward Backbone::forward(Tape& tape, const Graph& g,
                                         bool training,
                                         std::mt19937_64* dropout_rng) {
  BoundForward bf;
  bf.weight_vars.reserve(params_.size());
  for (Parameter& p : params_) bf.weight_vars.push_back(tape.param(p.value));
  bf.out = forward_with(tape, g, bf.weight_vars, training, dropout_rng);
  return bf;
}

namespace {

Tensor run_once(const Graph& g, const BackboneConfig& cfg) {
  Backbone bb(cfg, g.features().cols());
  Tape tape;
  return bb.forward(tape, g).out.value();
}

}  // namespace

Tensor forward_gcn(const Graph& g, BackboneConfig cfg) {
  cfg.architecture = Architecture::Gcn;
  return run_once(g, cfg);
}

Tensor forward_sage(const Graph& g, BackboneConfig cfg) {
  cfg.architecture = Architecture::Sage;
  return run_once(g, cfg);
}

Tensor forward_gat(const Graph& g, BackboneConfig cfg) {
  cfg.architecture = Architecture::Gat;
  return run_once(g, cfg);
}

}  // namespace gfairhint
