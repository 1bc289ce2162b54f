#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>

#include "gfairhint/error.hpp"
#include "gfairhint/fairness_graph.hpp"
#include "gfairhint/rng.hpp"

using namespace gfairhint;

namespace {

using Edges = std::vector<std::pair<std::size_t, std::size_t>>;

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

// Unit rows whose pairwise cosines are exactly 0.9, 0.5, 0.1 (Cholesky
// factor of that Gram matrix).
Tensor gram_features() {
  return Tensor::from_rows({
      {1.0, 0.0, 0.0},
      {0.9, 0.4358898943540673, 0.0},
      {0.5, -0.8029550685469663, 0.3244428422615247},
  });
}

}  // namespace

TEST_CASE("cosine similarity basics") {
  auto o = OracleSimilarity::cosine(
      Tensor::from_rows({{1, 0}, {1, 1}, {0, 2}, {0, 0}, {2, 0}}));
  CHECK(o.value(0, 1) == doctest::Approx(0.7071067811865475).epsilon(1e-14));
  CHECK(o.value(0, 2) == 0.0);          // orthogonal
  CHECK(o.value(0, 4) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(o.value(0, 3) == 0.0);          // zero-norm row
  CHECK(o.value(3, 3) == 1.0);          // diagonal convention
  CHECK(o.row(1)[1] == 1.0);
  CHECK(!o.is_binary());
}

TEST_CASE("negative cosines clamp to zero") {
  auto o = OracleSimilarity::cosine(Tensor::from_rows({{1, 0}, {-1, 0}}));
  CHECK(o.value(0, 1) == 0.0);
}

TEST_CASE("euclidean similarity normalizes by the global max distance") {
  auto o = OracleSimilarity::euclidean(Tensor::from_rows({{0}, {1}, {2}}));
  CHECK(o.value(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(o.value(1, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(o.value(0, 2) == 0.0);
  CHECK(o.value(1, 1) == 1.0);
}

TEST_CASE("euclidean on identical rows treats everything as similar") {
  auto o = OracleSimilarity::euclidean(Tensor::from_rows({{3, 3}, {3, 3}}));
  CHECK(o.value(0, 1) == 1.0);
}

TEST_CASE("euclidean needs at least two nodes") {
  CHECK_THROWS_AS(OracleSimilarity::euclidean(Tensor::from_rows({{1}})),
                  ContractError);
}

TEST_CASE("pair annotations canonicalize and validate") {
  auto o = OracleSimilarity::from_pairs(4, {{2, 0}, {1, 3}});
  CHECK(o.is_binary());
  CHECK(o.pairs() == Edges{{0, 2}, {1, 3}});
  CHECK(o.similar(0, 2));
  CHECK(o.similar(2, 0));
  CHECK(!o.similar(0, 1));
  CHECK(o.value(0, 2) == 1.0);
  CHECK(o.value(0, 1) == 0.0);
  CHECK(o.value(2, 2) == 1.0);

  CHECK_THROWS_AS(OracleSimilarity::from_pairs(4, {{1, 1}}), IngestError);
  CHECK_THROWS_AS(OracleSimilarity::from_pairs(4, {{0, 9}}), IngestError);
}

TEST_CASE("equivalence classes of sizes 3 and 2 induce four edges") {
  auto o = OracleSimilarity::from_classes(5, {0, 0, 0, 1, 1});
  auto fg = build_from_annotations(o);
  CHECK(fg.edges == Edges{{0, 1}, {0, 2}, {1, 2}, {3, 4}});
  CHECK(fg.n_nodes == 5);
}

TEST_CASE("pairs accessor rejects continuous oracles") {
  auto o = OracleSimilarity::cosine(Tensor::from_rows({{1, 0}, {0, 1}}));
  CHECK_THROWS_AS(o.pairs(), ContractError);
  CHECK_THROWS_AS(o.similar(0, 1), ContractError);
}

TEST_CASE("top-1 on the 0.9/0.5/0.1 triangle takes the union of picks") {
  auto o = OracleSimilarity::cosine(gram_features());
  auto fg = build_topk(o, 1);
  // 0 and 1 pick each other; 2 picks 0. The only non-edge is (1,2).
  CHECK(fg.edges == Edges{{0, 1}, {0, 2}});
  double eps = implied_epsilon(fg, o);
  CHECK(eps == o.value(1, 2));
  CHECK(eps == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("equal similarities break ties toward lower ids") {
  auto o = OracleSimilarity::cosine(
      Tensor::from_rows({{1, 1}, {1, 1}, {1, 1}, {1, 1}}));
  auto fg = build_topk(o, 1);
  CHECK(fg.edges == Edges{{0, 1}, {0, 2}, {0, 3}});
}

TEST_CASE("k = n-1 yields the complete graph with epsilon zero") {
  auto o = OracleSimilarity::cosine(
      Tensor::from_rows({{1, 0}, {0, 1}, {1, 1}, {2, 1}}));
  auto fg = build_topk(o, 3);
  CHECK(fg.edges.size() == 6);
  CHECK(implied_epsilon(fg, o) == 0.0);
}

TEST_CASE("top-k bounds and oracle kind are enforced") {
  auto o = OracleSimilarity::cosine(Tensor::from_rows({{1, 0}, {0, 1}}));
  CHECK_THROWS_AS(build_topk(o, 0), ConfigError);
  CHECK_THROWS_AS(build_topk(o, 2), ConfigError);
  auto b = OracleSimilarity::from_pairs(3, {{0, 1}});
  CHECK_THROWS_AS(build_topk(b, 1), ContractError);
}

TEST_CASE("binary oracles use the epsilon = 1 convention") {
  auto o = OracleSimilarity::from_pairs(3, {{0, 1}});
  auto fg = build_from_annotations(o);
  CHECK(implied_epsilon(fg, o) == 1.0);
}

TEST_CASE("implied epsilon matches brute force on a random instance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor f({8, 4});
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 4; ++j) f(i, j) = u(rng);
  auto o = OracleSimilarity::cosine(f);
  auto fg = build_topk(o, 2);
  double brute = 0.0;
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j)
      if (!fg.has_edge(i, j)) brute = std::max(brute, o.value(i, j));
  CHECK(implied_epsilon(fg, o) == brute);
}

TEST_CASE("every node keeps at least k fairness neighbors") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor f({12, 3});
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 3; ++j) f(i, j) = u(rng);
  auto o = OracleSimilarity::cosine(f);
  for (std::size_t k : {1u, 3u, 5u}) {
    auto fg = build_topk(o, k);
    auto nbrs = fg.neighbor_lists();
    for (const auto& ni : nbrs) CHECK(ni.size() >= k);
  }
}

TEST_CASE("fairness graph save/load round-trips edges and provenance") {
  FairnessGraph fg;
  fg.n_nodes = 4;
  fg.edges = {{0, 2}, {1, 3}};
  fg.provenance = "top-k union, k=2";
  fg.save("tfg_roundtrip.txt");
  auto back = FairnessGraph::load("tfg_roundtrip.txt");
  CHECK(back.n_nodes == 4);
  CHECK(back.edges == fg.edges);
  CHECK(back.provenance == fg.provenance);
  CHECK(back.fingerprint() == fg.fingerprint());
  CHECK(back.has_edge(0, 2));
  CHECK(back.has_edge(2, 0));
  CHECK(!back.has_edge(0, 1));
}

TEST_CASE("pair annotation files map through original ids") {
  write_file("tfg_pairs.txt", "# similar pairs\n10 30\n20 10\n");
  auto o = load_pairs_oracle("tfg_pairs.txt", 3, {10, 20, 30});
  CHECK(o.pairs() == Edges{{0, 1}, {0, 2}});

  write_file("tfg_pairs_bad.txt", "10 99\n");
  CHECK_THROWS_AS(load_pairs_oracle("tfg_pairs_bad.txt", 3, {10, 20, 30}),
                  IngestError);
}

TEST_CASE("class annotation files accept string labels and demand coverage") {
  write_file("tfg_classes.txt", "0 young\n1 old\n2 young\n");
  auto o = load_classes_oracle("tfg_classes.txt", 3);
  auto fg = build_from_annotations(o);
  CHECK(fg.edges == Edges{{0, 2}});

  write_file("tfg_classes_bad.txt", "0 young\n1 old\n");
  CHECK_THROWS_AS(load_classes_oracle("tfg_classes_bad.txt", 3), IngestError);
}

TEST_CASE("oracle fingerprints separate modes and inputs") {
  auto a = OracleSimilarity::cosine(Tensor::from_rows({{1, 0}, {0, 1}}));
  auto b = OracleSimilarity::euclidean(Tensor::from_rows({{1, 0}, {0, 1}}));
  auto c = OracleSimilarity::cosine(Tensor::from_rows({{1, 0}, {0, 2}}));
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
  auto again = OracleSimilarity::cosine(Tensor::from_rows({{1, 0}, {0, 1}}));
  CHECK(a.fingerprint() == again.fingerprint());
}
