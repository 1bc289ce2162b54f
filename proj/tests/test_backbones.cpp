#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>

#include "gfairhint/backbones.hpp"
#include "gfairhint/error.hpp"
#include "gradcheck.hpp"

using namespace gfairhint;
using gfairhint::testing::gradcheck;

namespace {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;

Tensor mat_mul(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j)
        out(i, j) += a(i, k) * b(k, j);
  return out;
}

Tensor relu_t(Tensor a) {
  for (auto& v : a.mutable_data()) v = v > 0 ? v : 0;
  return a;
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor random_features(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor f({n, d});
  for (auto& v : f.mutable_data()) v = u(rng);
  return f;
}

Graph permuted(const Graph& g, const std::vector<std::size_t>& p) {
  Edges edges;
  for (auto [i, j] : g.edges()) edges.emplace_back(p[i], p[j]);
  Tensor f({g.n_nodes(), g.features().cols()});
  for (std::size_t i = 0; i < g.n_nodes(); ++i)
    for (std::size_t c = 0; c < f.cols(); ++c)
      f(p[i], c) = g.features()(i, c);
  return Graph(g.n_nodes(), std::move(edges), std::move(f), {}, {});
}

void check_equivariant(Architecture arch) {
  std::mt19937_64 rng(99);
  Graph g(8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7},
              {1, 5}, {2, 6}},
          random_features(8, 3, 5), {}, {});
  std::vector<std::size_t> p(8);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);

  BackboneConfig cfg;
  cfg.architecture = arch;
  cfg.n_layers = 2;
  cfg.hidden_dim = 4;
  cfg.heads = 2;
  cfg.seed = 3;

  Backbone b1(cfg, 3), b2(cfg, 3);
  Tape t1, t2;
  Tensor u = b1.forward(t1, g).out.value();
  Graph gp = permuted(g, p);
  Tensor up = b2.forward(t2, gp).out.value();
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t c = 0; c < u.cols(); ++c)
      CHECK(u(i, c) == doctest::Approx(up(p[i], c)).epsilon(1e-10));
}

}  // namespace

TEST_CASE("gcn with identity weights passes an isolated node through") {
  Graph g(1, {}, Tensor::from_rows({{3.0, -1.5}}), {}, {});
  BackboneConfig cfg;
  cfg.n_layers = 1;
  cfg.hidden_dim = 2;
  Backbone bb(cfg, 2);
  bb.params()[0].value = identity(2);
  Tape tape;
  Tensor u = bb.forward(tape, g).out.value();
  CHECK(u(0, 0) == 3.0);
  CHECK(u(0, 1) == -1.5);
}

TEST_CASE("gcn two-node forward matches the dense oracle") {
  Graph g(2, {{0, 1}}, Tensor::from_rows({{1.0, 2.0}, {-0.5, 0.25}}), {}, {});
  BackboneConfig cfg;
  cfg.n_layers = 2;
  cfg.hidden_dim = 3;
  cfg.seed = 11;
  Backbone bb(cfg, 2);
  Tape tape;
  Tensor u = bb.forward(tape, g).out.value();

  Tensor a = g.normalized_adjacency_dense();
  Tensor h = relu_t(mat_mul(mat_mul(a, g.features()), bb.params()[0].value));
  Tensor want = mat_mul(mat_mul(a, h), bb.params()[1].value);
  REQUIRE(u.same_shape(want));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      CHECK(u(i, j) == doctest::Approx(want(i, j)).epsilon(1e-13));
}

TEST_CASE("sage isolated node sees only the self path") {
  Graph g(3, {{0, 1}}, Tensor::from_rows({{1, 0}, {0, 1}, {2, 3}}), {}, {});
  BackboneConfig cfg;
  cfg.architecture = Architecture::Sage;
  cfg.n_layers = 1;
  cfg.hidden_dim = 2;
  cfg.seed = 4;
  Backbone bb(cfg, 2);
  Tape tape;
  Tensor u = bb.forward(tape, g).out.value();
  Tensor want = mat_mul(g.features(), bb.params()[0].value);
  CHECK(u(2, 0) == doctest::Approx(want(2, 0)).epsilon(1e-14));
  CHECK(u(2, 1) == doctest::Approx(want(2, 1)).epsilon(1e-14));
}

TEST_CASE("sage on a regular graph with identical features collapses rows") {
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}},
          Tensor::from_rows({{1, 2}, {1, 2}, {1, 2}, {1, 2}}), {}, {});
  BackboneConfig cfg;
  cfg.architecture = Architecture::Sage;
  cfg.n_layers = 2;
  cfg.hidden_dim = 3;
  cfg.seed = 6;
  Backbone bb(cfg, 2);
  Tape tape;
  Tensor u = bb.forward(tape, g).out.value();
  for (std::size_t i = 1; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(u(i, c) == doctest::Approx(u(0, c)).epsilon(1e-13));
}

TEST_CASE("sage three-node path matches the dense oracle") {
  Graph g(3, {{0, 1}, {1, 2}},
          Tensor::from_rows({{1, 0}, {0.5, 0.5}, {0, -1}}), {}, {});
  BackboneConfig cfg;
  cfg.architecture = Architecture::Sage;
  cfg.n_layers = 2;
  cfg.hidden_dim = 2;
  cfg.seed = 8;
  Backbone bb(cfg, 2);
  Tape tape;
  Tensor u = bb.forward(tape, g).out.value();

  Tensor m = g.mean_adjacency().to_dense();
  auto sage_layer = [&](const Tensor& h, const Tensor& ws, const Tensor& wn) {
    Tensor self = mat_mul(h, ws);
    Tensor neigh = mat_mul(mat_mul(m, h), wn);
    Tensor out({h.rows(), ws.cols()});
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = self[i] + neigh[i];
    return out;
  };
  Tensor h = relu_t(sage_layer(g.features(), bb.params()[0].value,
                               bb.params()[1].value));
  Tensor want = sage_layer(h, bb.params()[2].value, bb.params()[3].value);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(u(i, c) == doctest::Approx(want(i, c)).epsilon(1e-13));
}

TEST_CASE("gat on a single node puts all attention on the self loop") {
  Graph g(1, {}, Tensor::from_rows({{2.0, -1.0}}), {}, {});
  BackboneConfig cfg;
  cfg.architecture = Architecture::Gat;
  cfg.n_layers = 1;
  cfg.hidden_dim = 3;
  cfg.heads = 1;
  cfg.seed = 2;
  Backbone bb(cfg, 2);
  Tape tape;
  Tensor u = bb.forward(tape, g).out.value();

  const auto& rec = bb.last_attention();
  REQUIRE(rec.size() == 1);
  CHECK(rec[0].alpha(0, 0) == 1.0);
  Tensor want = mat_mul(g.features(), bb.params()[0].value);
  for (std::size_t c = 0; c < 3; ++c)
    CHECK(u(0, c) == doctest::Approx(want(0, c)).epsilon(1e-14));
}

TEST_CASE("gat attention is uniform over identical neighborhoods") {
  Graph g(3, {{0, 1}, {0, 2}, {1, 2}},
          Tensor::from_rows({{1, 1}, {1, 1}, {1, 1}}), {}, {});
  BackboneConfig cfg;
  cfg.architecture = Architecture::Gat;
  cfg.n_layers = 1;
  cfg.hidden_dim = 4;
  cfg.heads = 2;
  cfg.seed = 5;
  Backbone bb(cfg, 2);
  Tape tape;
  bb.forward(tape, g);
  const auto& rec = bb.last_attention();
  REQUIRE(rec.size() == 1);
  for (std::size_t k = 0; k < rec[0].alpha.rows(); ++k)
    for (std::size_t h = 0; h < 2; ++h)
      CHECK(rec[0].alpha(k, h) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
}

TEST_CASE("gat attention rows sum to one on a random graph") {
  std::mt19937_64 rng(17);
  Edges edges;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j)
      if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.4)
        edges.emplace_back(i, j);
  Graph g(10, edges, random_features(10, 4, 23), {}, {});
  BackboneConfig cfg;
  cfg.architecture = Architecture::Gat;
  cfg.n_layers = 2;
  cfg.hidden_dim = 6;
  cfg.heads = 3;
  cfg.seed = 7;
  Backbone bb(cfg, 4);
  Tape tape;
  bb.forward(tape, g);
  for (const auto& rec : bb.last_attention()) {
    REQUIRE(rec.seg_indptr.size() == 11);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t h = 0; h < 3; ++h) {
        double s = 0.0;
        for (std::size_t k = rec.seg_indptr[i]; k < rec.seg_indptr[i + 1]; ++k)
          s += rec.alpha(k, h);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
      }
  }
}

TEST_CASE("all forwards are permutation equivariant") {
  check_equivariant(Architecture::Gcn);
  check_equivariant(Architecture::Sage);
  check_equivariant(Architecture::Gat);
}

TEST_CASE("backbone weight gradients match finite differences") {
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}, {0, 2}}, random_features(4, 3, 31), {},
          {});
  for (Architecture arch :
       {Architecture::Gcn, Architecture::Sage, Architecture::Gat}) {
    BackboneConfig cfg;
    cfg.architecture = arch;
    cfg.n_layers = 2;
    cfg.hidden_dim = 4;
    cfg.heads = 2;
    cfg.seed = 13;
    Backbone bb(cfg, 3);
    std::vector<Tensor> leaves;
    for (auto& p : bb.params()) leaves.push_back(p.value);
    auto build = [&](Tape& tape, const std::vector<Var>& v) {
      return mean(bb.forward_with(tape, g, v));
    };
    auto res = gradcheck(build, leaves);
    CHECK_MESSAGE(res.ok, architecture_name(arch), ": ", res.detail);
  }
}

TEST_CASE("config validation") {
  BackboneConfig cfg;
  cfg.architecture = Architecture::Gat;
  cfg.hidden_dim = 5;
  cfg.heads = 2;
  CHECK_THROWS_AS(Backbone(cfg, 3), ConfigError);
  BackboneConfig zero;
  zero.n_layers = 0;
  CHECK_THROWS_AS(Backbone(zero, 3), ConfigError);
  BackboneConfig bad_drop;
  bad_drop.dropout = 1.0;
  CHECK_THROWS_AS(Backbone(bad_drop, 3), ConfigError);

  Graph g(2, {{0, 1}}, Tensor({2, 3}), {}, {});
  Backbone bb({}, 5);
  Tape tape;
  CHECK_THROWS_AS(bb.forward(tape, g), ConfigError);
}

TEST_CASE("forwards are deterministic and dropout needs an rng") {
  Graph g(4, {{0, 1}, {1, 2}, {2, 3}}, random_features(4, 3, 41), {}, {});
  BackboneConfig cfg;
  cfg.seed = 20;
  cfg.hidden_dim = 4;
  CHECK(forward_gcn(g, cfg) == forward_gcn(g, cfg));
  CHECK(forward_sage(g, cfg) == forward_sage(g, cfg));
  BackboneConfig gat_cfg = cfg;
  gat_cfg.heads = 2;
  CHECK(forward_gat(g, gat_cfg) == forward_gat(g, gat_cfg));

  BackboneConfig drop = cfg;
  drop.dropout = 0.5;
  Backbone bb(drop, 3);
  Tape tape;
  CHECK_THROWS_AS(bb.forward(tape, g, true, nullptr), ContractError);

  std::mt19937_64 rng(1);
  Tape t2;
  Tensor trained = bb.forward(t2, g, true, &rng).out.value();
  Tape t3;
  Tensor eval = bb.forward(t3, g, false, nullptr).out.value();
  CHECK(!(trained == eval));
}

TEST_CASE("residual toggle adds the layer input when shapes allow") {
  Graph g(2, {{0, 1}}, Tensor::from_rows({{1.0, -2.0}, {0.5, 3.0}}), {}, {});
  BackboneConfig off;
  off.n_layers = 1;
  off.hidden_dim = 2;
  off.seed = 9;
  BackboneConfig on = off;
  on.residual = true;
  Backbone b_off(off, 2), b_on(on, 2);
  Tape t1, t2;
  Tensor u_off = b_off.forward(t1, g).out.value();
  Tensor u_on = b_on.forward(t2, g).out.value();
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(u_on(i, c) ==
            doctest::Approx(u_off(i, c) + g.features()(i, c)).epsilon(1e-14));
}
