#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gfairhint/sparse.hpp"
#include "gfairhint/tensor.hpp"

namespace gfairhint {

enum class SplitTag : unsigned char { None = 0, Train = 1, Val = 2, Test = 3 };

const char* split_tag_name(SplitTag tag);

struct SplitSpec {
  enum class Mode { None, Fractions, File, Explicit } mode = Mode::None;
  // Fractions mode; must sum to <= 1, remainder is untagged.
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
  std::uint64_t seed = 0;
  // File mode.
  std::string file;
  // Explicit mode, in original (pre-reindex) node ids.
  std::vector<std::uint64_t> train_ids, val_ids, test_ids;

  static SplitSpec fractions(double train, double val, double test,
                             std::uint64_t seed);
  static SplitSpec from_file(std::string path);
};

struct LoadReport {
  std::size_t duplicate_edge_lines = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t one_directional_lines = 0;  // lines whose reverse was absent
  bool reindexed = false;
  std::vector<std::uint64_t> original_ids;  // new id -> original id
};

// Undirected graph with dense features. Edges are stored canonically
// (i < j, sorted) and mirrored into CSR. Immutable after construction.
class Graph {
 public:
  Graph(std::size_t n_nodes,
        std::vector<std::pair<std::size_t, std::size_t>> edges,
        Tensor features, std::vector<int> labels,
        std::vector<SplitTag> split);

  // Node universe: dense ids 0..n-1 when every referenced id is < n
  // (n from the feature header); otherwise the referenced ids are
  // re-indexed by sorted order and feature row k belongs to the k-th
  // smallest original id. label_file/split may be empty.
  static Graph load(const std::string& edge_file,
                    const std::string& feature_file,
                    const std::string& label_file, const SplitSpec& split,
                    LoadReport* report = nullptr);

  void save(const std::string& edge_file, const std::string& feature_file,
            const std::string& label_file,
            const std::string& split_file) const;

  std::size_t n_nodes() const { return n_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const {
    return edges_;
  }
  const Tensor& features() const { return features_; }

  // -1 marks an unlabeled node; labeled values lie in [0, n_classes).
  const std::vector<int>& labels() const { return labels_; }
  std::size_t n_classes() const { return n_classes_; }

  const std::vector<SplitTag>& split() const { return split_; }
  std::vector<std::size_t> split_ids(SplitTag tag) const;

  // Unweighted symmetric adjacency, no self-loops.
  const CsrMatrix& adjacency() const { return adj_; }

  // D^{-1/2} (A + I) D^{-1/2}, cached.
  const CsrMatrix& normalized_adjacency() const;
  Tensor normalized_adjacency_dense() const;

  // Row-mean aggregation matrix: A_ij / deg(i); zero rows for isolated nodes.
  const CsrMatrix& mean_adjacency() const;

  // Sorted ascending, excludes the node itself.
  std::vector<std::vector<std::size_t>> neighbor_lists() const;

  // Content hash over structure, features, labels; keys the hint cache.
  std::uint64_t fingerprint() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  Tensor features_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
  std::vector<SplitTag> split_;
  CsrMatrix adj_;
  mutable std::shared_ptr<CsrMatrix> norm_adj_;
  mutable std::shared_ptr<CsrMatrix> mean_adj_;
};

// Canonicalizes an undirected edge list: maps to (min,max), drops self-loops
// and duplicates, sorts. Returns counts of dropped items through the pointers.
std::vector<std::pair<std::size_t, std::size_t>> canonical_edges(
    const std::vector<std::pair<std::size_t, std::size_t>>& raw,
    std::size_t* dropped_self = nullptr, std::size_t* dropped_dup = nullptr);

// Symmetric 0/1 CSR from a canonical edge list.
CsrMatrix adjacency_from_edges(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// D^{-1/2} (A + I) D^{-1/2} in CSR for an arbitrary edge list; shared by the
// task graph and the link predictor's masked fairness graph.
CsrMatrix normalized_adjacency_csr(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// Seeded split assignment over n nodes (Fractions/Explicit/None modes; File
// mode is resolved by Graph::load which knows the id mapping).
std::vector<SplitTag> assign_split(std::size_t n, const SplitSpec& spec);

}  // namespace gfairhint
