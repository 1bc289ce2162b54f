#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfairhint/tensor.hpp"

namespace gfairhint {

enum class SimilarityFn { Cosine, Euclidean };

const char* similarity_fn_name(SimilarityFn fn);

// Pairwise oracle similarity over n nodes. Continuous mode keeps a dense
// matrix up to a size cutoff and recomputes rows on demand above it, so no
// caller may assume O(1) row access. Binary modes store the similar pairs.
class OracleSimilarity {
 public:
  enum class Mode { Continuous, BinaryPairs, EquivalenceClasses };

  static OracleSimilarity cosine(const Tensor& features);
  static OracleSimilarity euclidean(const Tensor& features);
  static OracleSimilarity from_pairs(
      std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> pairs);
  static OracleSimilarity from_classes(std::size_t n,
                                       const std::vector<std::int64_t>& classes);

  Mode mode() const { return mode_; }
  bool is_binary() const { return mode_ != Mode::Continuous; }
  std::size_t n() const { return n_; }

  // Continuous modes; for binary modes these return the 0/1 indicator.
  double value(std::size_t i, std::size_t j) const;
  std::vector<double> row(std::size_t i) const;  // includes the diagonal 1

  // Binary modes only.
  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const;
  bool similar(std::size_t i, std::size_t j) const;

  std::uint64_t fingerprint() const;

 private:
  OracleSimilarity() = default;
  void materialize_if_small();
  double compute(std::size_t i, std::size_t j) const;

  Mode mode_ = Mode::Continuous;
  std::size_t n_ = 0;
  SimilarityFn fn_ = SimilarityFn::Cosine;
  Tensor features_;            // continuous: source rows
  std::vector<double> norms_;  // cosine row norms
  double max_dist_ = 0.0;      // euclidean normalizer
  std::optional<Tensor> dense_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;  // canonical
  std::vector<std::vector<std::size_t>> nbrs_;              // binary adjacency
};

// Annotation file loaders. original_ids (new id -> original id, sorted) maps
// file ids through the same re-indexing the task graph used; empty means the
// dense identity mapping.
OracleSimilarity load_pairs_oracle(const std::string& path, std::size_t n,
                                   const std::vector<std::uint64_t>& original_ids = {});
OracleSimilarity load_classes_oracle(const std::string& path, std::size_t n,
                                     const std::vector<std::uint64_t>& original_ids = {});

// Unweighted undirected graph over the task's node set marking similar pairs.
struct FairnessGraph {
  std::size_t n_nodes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // canonical order
  std::string provenance;

  std::vector<std::vector<std::size_t>> neighbor_lists() const;
  bool has_edge(std::size_t i, std::size_t j) const;
  std::uint64_t fingerprint() const;

  void save(const std::string& path) const;
  static FairnessGraph load(const std::string& path);
};

// Per-node top-K selection by (similarity desc, id asc), union over
// directions. K must satisfy 1 <= K < n.
FairnessGraph build_topk(const OracleSimilarity& oracle, std::size_t k);

// Binary modes: edges are exactly the annotated pairs / within-class cliques.
FairnessGraph build_from_annotations(const OracleSimilarity& oracle);

// Largest oracle similarity over non-connected pairs; the operational
// edge-existence threshold. Binary oracles use the convention epsilon = 1.
double implied_epsilon(const FairnessGraph& fg, const OracleSimilarity& oracle);

}  // namespace gfairhint
