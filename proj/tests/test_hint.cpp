#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "gfairhint/error.hpp"
#include "gfairhint/hint.hpp"

using namespace gfairhint;

namespace {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;

FairnessGraph two_cliques(std::size_t half) {
  FairnessGraph fg;
  fg.n_nodes = 2 * half;
  for (std::size_t base : {std::size_t{0}, half})
    for (std::size_t i = 0; i < half; ++i)
      for (std::size_t j = i + 1; j < half; ++j)
        fg.edges.emplace_back(base + i, base + j);
  std::sort(fg.edges.begin(), fg.edges.end());
  fg.provenance = "two cliques";
  return fg;
}

FairnessGraph ring(std::size_t n) {
  FairnessGraph fg;
  fg.n_nodes = n;
  for (std::size_t i = 0; i + 1 < n; ++i) fg.edges.emplace_back(i, i + 1);
  fg.edges.emplace_back(0, n - 1);
  std::sort(fg.edges.begin(), fg.edges.end());
  return fg;
}

Tensor clique_features(std::size_t half) {
  Tensor f({2 * half, 2});
  for (std::size_t i = 0; i < 2 * half; ++i) f(i, i < half ? 0 : 1) = 1.0;
  return f;
}

}  // namespace

TEST_CASE("a 200-edge graph holds out 5 validation and 10 test edges") {
  auto fg = ring(200);
  auto split = split_edges(fg, 0.025, 0.05, 3);
  CHECK(split.val_pos.size() == 5);
  CHECK(split.test_pos.size() == 10);
  CHECK(split.train_pos.size() == 185);
  CHECK(!split.floored_to_minimum);
  CHECK(split.val_neg.size() == 5);
  CHECK(split.test_neg.size() == 10);

  // positives partition the edge set
  Edges all = split.train_pos;
  all.insert(all.end(), split.val_pos.begin(), split.val_pos.end());
  all.insert(all.end(), split.test_pos.begin(), split.test_pos.end());
  std::sort(all.begin(), all.end());
  CHECK(all == fg.edges);

  // negatives are distinct non-edges, never self-pairs
  Edges negs = split.val_neg;
  negs.insert(negs.end(), split.test_neg.begin(), split.test_neg.end());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [i, j] : negs) {
    CHECK(i != j);
    CHECK(!fg.has_edge(i, j));
    CHECK(seen.insert({i, j}).second);
  }
}

TEST_CASE("edge splitting is seed-deterministic") {
  auto fg = ring(100);
  auto a = split_edges(fg, 0.025, 0.05, 9);
  auto b = split_edges(fg, 0.025, 0.05, 9);
  CHECK(a.val_pos == b.val_pos);
  CHECK(a.test_pos == b.test_pos);
  CHECK(a.train_pos == b.train_pos);
  CHECK(a.val_neg == b.val_neg);
  CHECK(a.test_neg == b.test_neg);
  auto c = split_edges(fg, 0.025, 0.05, 10);
  CHECK(a.train_pos != c.train_pos);
}

TEST_CASE("tiny graphs floor held-out counts to one edge") {
  auto fg = ring(10);
  auto split = split_edges(fg, 0.025, 0.05, 0);
  CHECK(split.val_pos.size() == 1);  // 0.25 edges rounds to zero, floored
  CHECK(split.test_pos.size() == 1);
  CHECK(split.floored_to_minimum);
}

TEST_CASE("splitting rejects impossible requests") {
  auto fg = ring(10);
  CHECK_THROWS_AS(split_edges(fg, 0.6, 0.5, 0), ConfigError);
  CHECK_THROWS_AS(split_edges(fg, -0.1, 0.5, 0), ConfigError);
  FairnessGraph empty;
  empty.n_nodes = 4;
  CHECK_THROWS_AS(split_edges(empty, 0.1, 0.1, 0), ContractError);
  FairnessGraph two;
  two.n_nodes = 4;
  two.edges = {{0, 1}, {2, 3}};
  CHECK_THROWS_AS(split_edges(two, 0.4, 0.4, 0), ContractError);
}

TEST_CASE("link probability is a stable sigmoid of the dot product") {
  std::vector<double> zero{0.0, 0.0};
  CHECK(link_prob(zero, zero) == 0.5);
  std::vector<double> a{std::log(3.0), 0.0}, b{1.0, 0.0};
  CHECK(link_prob(a, b) == doctest::Approx(0.75).epsilon(1e-15));
  std::vector<double> big{2.0, 0.0}, neg{-500.0, 0.0};
  CHECK(link_prob(big, big) == doctest::Approx(0.9820137900379085).epsilon(1e-14));
  CHECK(link_prob(big, neg) >= 0.0);
  CHECK(link_prob(big, neg) < 1e-300);
  std::vector<double> short_vec{1.0};
  CHECK_THROWS_AS(link_prob(a, short_vec), ShapeError);
}

TEST_CASE("rank auc hand values") {
  CHECK(rank_auc({2, 3}, {0, 1}) == 1.0);
  CHECK(rank_auc({0, 1}, {2, 3}) == 0.0);
  CHECK(rank_auc({1, 1}, {1, 1}) == 0.5);
  CHECK(rank_auc({3, 1}, {2, 0}) == 0.75);
  CHECK_THROWS_AS(rank_auc({}, {1}), ContractError);
}

TEST_CASE("hint matrices round-trip through disk bitwise") {
  HintMatrix h;
  h.values = Tensor::from_rows({{0.1, 1.0 / 3.0}, {1e-17, -2.5}, {7, 0}});
  h.seed = 42;
  h.save("th_hints.txt");
  auto back = HintMatrix::load("th_hints.txt");
  CHECK(back.values == h.values);
  CHECK(back.seed == 42);
  CHECK(back.frozen);
}

TEST_CASE("hint loading validates the header") {
  {
    std::ofstream out("th_bad_hints.txt");
    out << "2 2 0\n1 2\n";
  }
  CHECK_THROWS_AS(HintMatrix::load("th_bad_hints.txt"), IngestError);
  CHECK_THROWS_AS(HintMatrix::load("th_missing_file.txt"), IoError);
}

TEST_CASE("hint config fingerprints separate settings") {
  HintConfig a;
  HintConfig b = a;
  b.dim = 64;
  HintConfig c = a;
  c.seed = 1;
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
  CHECK(a.fingerprint() == HintConfig{}.fingerprint());
}

TEST_CASE("training separates two fairness cliques") {
  auto fg = two_cliques(5);
  auto f = clique_features(5);
  HintConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 200;
  cfg.lr = 0.05;
  cfg.seed = 1;
  auto [hints, report] = train_hints(f, fg, cfg);
  CHECK(hints.frozen);
  CHECK(hints.values.rows() == 10);
  CHECK(hints.values.cols() == 8);
  CHECK(report.epoch_loss.size() == 200);
  CHECK(report.epoch_loss.back() < report.epoch_loss.front());

  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = i + 1; j < 10; ++j) {
      double p = link_prob(hints.values.row(i), hints.values.row(j));
      if (fg.has_edge(i, j)) { within += p; ++nw; }
      else { cross += p; ++nc; }
    }
  within /= double(nw);
  cross /= double(nc);
  CHECK(within > 0.9);
  CHECK(cross < 0.1);
}

TEST_CASE("hint training is bitwise deterministic in the seed") {
  auto fg = two_cliques(4);
  auto f = clique_features(4);
  HintConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 30;
  cfg.seed = 7;
  auto [h1, r1] = train_hints(f, fg, cfg);
  auto [h2, r2] = train_hints(f, fg, cfg);
  CHECK(h1.values == h2.values);
  CHECK(r1.epoch_loss == r2.epoch_loss);
  cfg.seed = 8;
  auto [h3, r3] = train_hints(f, fg, cfg);
  CHECK(!(h1.values == h3.values));
}

TEST_CASE("zero training epochs still produce finite hints") {
  auto fg = two_cliques(4);
  HintConfig cfg;
  cfg.dim = 4;
  cfg.epochs = 0;
  auto [hints, report] = train_hints(clique_features(4), fg, cfg);
  CHECK(report.epoch_loss.empty());
  CHECK(hints.values.rows() == 8);
  hints.values.validate_finite("untrained hints");
}

TEST_CASE("training checks the feature row count") {
  auto fg = two_cliques(4);
  HintConfig cfg;
  CHECK_THROWS_AS(train_hints(Tensor({3, 2}), fg, cfg), ContractError);
}

TEST_CASE("theorem verification on crafted embeddings") {
  // D(0,1) = 1 - sigmoid(4), the cross distances sit near one
  HintMatrix h;
  h.values = Tensor::from_rows({{2, 0}, {2, 0}, {-2, 0}});
  FairnessGraph fg;
  fg.n_nodes = 3;
  fg.edges = {{0, 1}};
  auto oracle = OracleSimilarity::from_pairs(3, {{0, 1}});

  auto rep = verify_theorem(h, fg, oracle, 0.3);
  CHECK(rep.epsilon == 1.0);
  CHECK(rep.delta == 0.3);
  CHECK(rep.delta_in_range);
  CHECK(rep.epsilon_exceeds_delta);
  CHECK(rep.edges_checked == 1);
  CHECK(rep.nonedges_checked == 2);
  CHECK(rep.edge_fraction == 1.0);
  CHECK(rep.nonedge_fraction == 1.0);
  CHECK(rep.definition1_fraction == 1.0);

  auto loose = verify_theorem(h, fg, oracle, 1.0);
  CHECK(!loose.delta_in_range);

  HintMatrix wrong;
  wrong.values = Tensor({2, 2});
  CHECK_THROWS_AS(verify_theorem(wrong, fg, oracle, 0.3), ContractError);
}

TEST_CASE("trained cliques satisfy the distance theorem") {
  auto fg = two_cliques(5);
  HintConfig cfg;
  cfg.dim = 8;
  cfg.epochs = 200;
  cfg.lr = 0.05;
  cfg.seed = 2;
  auto [hints, report] = train_hints(clique_features(5), fg, cfg);
  CHECK(report.epoch_loss.size() == 200);
  auto oracle = OracleSimilarity::from_pairs(5 * 2, fg.edges);
  auto rep = verify_theorem(hints, fg, oracle, 0.3);
  CHECK(rep.edge_fraction >= 0.9);
  CHECK(rep.nonedge_fraction >= 0.9);
  CHECK(rep.epsilon_exceeds_delta);
}
