#include "gfairhint/fairness_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "gfairhint/error.hpp"
#include "gfairhint/graph.hpp"
#include "gfairhint/rng.hpp"
#include "gfairhint/textio.hpp"

namespace gfairhint {

namespace {
// Dense n x n similarity storage stops here; above it rows are recomputed
// on demand (8-byte entries make the spec's 10k cutoff a 800 MB matrix).
constexpr std::size_t kDenseLimit = 2000;
}  // namespace

const char* similarity_fn_name(SimilarityFn fn) {
  return fn == SimilarityFn::Cosine ? "cosine" : "euclidean";
}

OracleSimilarity OracleSimilarity::cosine(const Tensor& features) {
  OracleSimilarity o;
  o.mode_ = Mode::Continuous;
  o.fn_ = SimilarityFn::Cosine;
  o.n_ = features.rows();
  o.features_ = features;
  o.norms_.resize(o.n_);
  for (std::size_t i = 0; i < o.n_; ++i) {
    double s = 0.0;
    for (double v : features.row(i)) s += v * v;
    o.norms_[i] = std::sqrt(s);
  }
  o.materialize_if_small();
  return o;
}

OracleSimilarity OracleSimilarity::euclidean(const Tensor& features) {
  OracleSimilarity o;
  o.mode_ = Mode::Continuous;
  o.fn_ = SimilarityFn::Euclidean;
  o.n_ = features.rows();
  o.features_ = features;
  if (o.n_ < 2)
    throw ContractError("euclidean similarity needs at least two nodes");
  double max_d2 = 0.0;
  for (std::size_t i = 0; i < o.n_; ++i) {
    auto ri = features.row(i);
    for (std::size_t j = i + 1; j < o.n_; ++j) {
      auto rj = features.row(j);
      double d2 = 0.0;
      for (std::size_t l = 0; l < ri.size(); ++l) {
        double diff = ri[l] - rj[l];
        d2 += diff * diff;
      }
      max_d2 = std::max(max_d2, d2);
    }
  }
  o.max_dist_ = std::sqrt(max_d2);
  o.materialize_if_small();
  return o;
}

OracleSimilarity OracleSimilarity::from_pairs(
    std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> pairs) {
  OracleSimilarity o;
  o.mode_ = Mode::BinaryPairs;
  o.n_ = n;
  for (auto [i, j] : pairs) {
    if (i == j) throw IngestError("similarity pair may not be a self-pair");
    if (i >= n || j >= n)
      throw IngestError("similarity pair references unknown node");
  }
  o.pairs_ = canonical_edges(pairs);
  o.nbrs_.resize(n);
  for (auto [i, j] : o.pairs_) {
    o.nbrs_[i].push_back(j);
    o.nbrs_[j].push_back(i);
  }
  for (auto& l : o.nbrs_) std::sort(l.begin(), l.end());
  return o;
}

OracleSimilarity OracleSimilarity::from_classes(
    std::size_t n, const std::vector<std::int64_t>& classes) {
  if (classes.size() != n)
    throw IngestError("class map must cover every node");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::map<std::int64_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[classes[i]].push_back(i);
  for (auto& [cls, ids] : members)
    for (std::size_t a = 0; a < ids.size(); ++a)
      for (std::size_t b = a + 1; b < ids.size(); ++b)
        pairs.emplace_back(ids[a], ids[b]);
  OracleSimilarity o = from_pairs(n, std::move(pairs));
  o.mode_ = Mode::EquivalenceClasses;
  return o;
}

void OracleSimilarity::materialize_if_small() {
  if (n_ > kDenseLimit) return;
  Tensor s({n_, n_});
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) s(i, j) = compute(i, j);
  }
  dense_ = std::move(s);
}

double OracleSimilarity::compute(std::size_t i, std::size_t j) const {
  if (i == j) return 1.0;
  auto ri = features_.row(i);
  auto rj = features_.row(j);
  if (fn_ == SimilarityFn::Cosine) {
    if (norms_[i] == 0.0 || norms_[j] == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t l = 0; l < ri.size(); ++l) dot += ri[l] * rj[l];
    double s = dot / (norms_[i] * norms_[j]);
    return std::clamp(s, 0.0, 1.0);
  }
  if (max_dist_ == 0.0) return 1.0;  // all rows identical
  double d2 = 0.0;
  for (std::size_t l = 0; l < ri.size(); ++l) {
    double diff = ri[l] - rj[l];
    d2 += diff * diff;
  }
  return std::clamp(1.0 - std::sqrt(d2) / max_dist_, 0.0, 1.0);
}

double OracleSimilarity::value(std::size_t i, std::size_t j) const {
  if (i >= n_ || j >= n_) throw ContractError("oracle index out of range");
  if (is_binary()) return similar(i, j) ? 1.0 : 0.0;
  if (dense_) return (*dense_)(i, j);
  return compute(i, j);
}

std::vector<double> OracleSimilarity::row(std::size_t i) const {
  if (i >= n_) throw ContractError("oracle index out of range");
  std::vector<double> out(n_);
  if (is_binary()) {
    for (std::size_t j : nbrs_[i]) out[j] = 1.0;
    out[i] = 1.0;
    return out;
  }
  if (dense_) {
    auto r = dense_->row(i);
    std::copy(r.begin(), r.end(), out.begin());
    return out;
  }
  for (std::size_t j = 0; j < n_; ++j) out[j] = compute(i, j);
  return out;
}

const std::vector<std::pair<std::size_t, std::size_t>>& OracleSimilarity::pairs()
    const {
  if (!is_binary())
    throw ContractError("pair list is defined only for binary oracles");
  return pairs_;
}

bool OracleSimilarity::similar(std::size_t i, std::size_t j) const {
  if (!is_binary())
    throw ContractError("similar() is defined only for binary oracles");
  if (i == j) return true;
  const auto& l = nbrs_[i];
  return std::binary_search(l.begin(), l.end(), j);
}

std::uint64_t OracleSimilarity::fingerprint() const {
  std::uint64_t h = fnv1a("oracle-v1");
  auto m = static_cast<int>(mode_);
  h = fnv1a(&m, sizeof(m), h);
  h = fnv1a(&n_, sizeof(n_), h);
  if (is_binary()) {
    for (auto [i, j] : pairs_) {
      h = fnv1a(&i, sizeof(i), h);
      h = fnv1a(&j, sizeof(j), h);
    }
    return h;
  }
  h = fnv1a(std::string(similarity_fn_name(fn_)), h);
  auto span = features_.data();
  h = fnv1a(span.data(), span.size() * sizeof(double), h);
  return h;
}

namespace {

std::size_t map_original(std::uint64_t id,
                         const std::vector<std::uint64_t>& original_ids,
                         std::size_t n, const std::string& ctx) {
  if (original_ids.empty()) {
    if (id >= n) throw IngestError(ctx + ": unknown node id " + std::to_string(id));
    return static_cast<std::size_t>(id);
  }
  auto it = std::lower_bound(original_ids.begin(), original_ids.end(), id);
  if (it == original_ids.end() || *it != id)
    throw IngestError(ctx + ": unknown node id " + std::to_string(id));
  return static_cast<std::size_t>(it - original_ids.begin());
}

}  // namespace

OracleSimilarity load_pairs_oracle(const std::string& path, std::size_t n,
                                   const std::vector<std::uint64_t>& original_ids) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const std::string& line : read_data_lines(path)) {
    auto f = split_fields(line);
    if (f.size() < 2) throw IngestError(path + ": pair line needs two ids");
    pairs.emplace_back(
        map_original(parse_u64(f[0], path), original_ids, n, path),
        map_original(parse_u64(f[1], path), original_ids, n, path));
  }
  return OracleSimilarity::from_pairs(n, std::move(pairs));
}

OracleSimilarity load_classes_oracle(const std::string& path, std::size_t n,
                                     const std::vector<std::uint64_t>& original_ids) {
  std::vector<std::int64_t> classes(n, -1);
  std::map<std::string, std::int64_t> label_ids;
  for (const std::string& line : read_data_lines(path)) {
    auto f = split_fields(line);
    if (f.size() < 2) throw IngestError(path + ": class line needs id and label");
    std::size_t node = map_original(parse_u64(f[0], path), original_ids, n, path);
    auto it = label_ids.try_emplace(f[1], static_cast<std::int64_t>(label_ids.size())).first;
    classes[node] = it->second;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (classes[i] < 0)
      throw IngestError(path + ": node " + std::to_string(i) +
                        " has no class label");
  return OracleSimilarity::from_classes(n, classes);
}

std::vector<std::vector<std::size_t>> FairnessGraph::neighbor_lists() const {
  std::vector<std::vector<std::size_t>> nbrs(n_nodes);
  for (auto [i, j] : edges) {
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  for (auto& l : nbrs) std::sort(l.begin(), l.end());
  return nbrs;
}

bool FairnessGraph::has_edge(std::size_t i, std::size_t j) const {
  if (i == j) return false;
  auto e = std::make_pair(std::min(i, j), std::max(i, j));
  return std::binary_search(edges.begin(), edges.end(), e);
}

std::uint64_t FairnessGraph::fingerprint() const {
  std::uint64_t h = fnv1a("fairness-graph-v1");
  h = fnv1a(&n_nodes, sizeof(n_nodes), h);
  for (auto [i, j] : edges) {
    h = fnv1a(&i, sizeof(i), h);
    h = fnv1a(&j, sizeof(j), h);
  }
  return h;
}

void FairnessGraph::save(const std::string& path) const {
  auto out = open_for_write(path);
  out << "# fairness graph: " << provenance << '\n';
  out << "# nodes: " << n_nodes << '\n';
  for (auto [i, j] : edges) out << i << '\t' << j << '\n';
}

FairnessGraph FairnessGraph::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  FairnessGraph fg;
  bool have_n = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      auto pos = line.find("nodes:");
      if (pos != std::string::npos) {
        fg.n_nodes = parse_u64(
            split_fields(line.substr(pos + 6)).at(0), path);
        have_n = true;
      }
      pos = line.find("fairness graph:");
      if (pos != std::string::npos) {
        std::size_t start = pos + 15;
        while (start < line.size() && line[start] == ' ') ++start;
        fg.provenance = line.substr(start);
      }
      continue;
    }
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto f = split_fields(line);
    if (f.empty()) continue;
    if (f.size() < 2) throw IngestError(path + ": edge line needs two ids");
    fg.edges.emplace_back(parse_u64(f[0], path), parse_u64(f[1], path));
  }
  if (!have_n)
    throw IngestError(path + ": missing '# nodes: n' header");
  fg.edges = canonical_edges(fg.edges);
  for (auto [i, j] : fg.edges)
    if (j >= fg.n_nodes)
      throw IngestError(path + ": edge endpoint out of range");
  return fg;
}

FairnessGraph build_topk(const OracleSimilarity& oracle, std::size_t k) {
  if (oracle.is_binary())
    throw ContractError("top-K construction needs a continuous oracle");
  std::size_t n = oracle.n();
  if (k < 1 || k >= n)
    throw ConfigError("top-K parameter must satisfy 1 <= K < n, got K=" +
                      std::to_string(k) + " n=" + std::to_string(n));
  std::vector<std::pair<std::size_t, std::size_t>> selected;
  selected.reserve(n * k);
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row = oracle.row(i);
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.push_back(j);
    // ties at equal similarity resolve to the lower node id
    std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end(),
                     [&row](std::size_t a, std::size_t b) {
                       if (row[a] != row[b]) return row[a] > row[b];
                       return a < b;
                     });
    for (std::size_t t = 0; t < k; ++t) selected.emplace_back(i, cand[t]);
  }
  FairnessGraph fg;
  fg.n_nodes = n;
  fg.edges = canonical_edges(selected);
  fg.provenance = "top-k union, k=" + std::to_string(k);
  return fg;
}

FairnessGraph build_from_annotations(const OracleSimilarity& oracle) {
  if (!oracle.is_binary())
    throw ContractError("annotation construction needs a binary oracle");
  FairnessGraph fg;
  fg.n_nodes = oracle.n();
  fg.edges = oracle.pairs();
  fg.provenance = oracle.mode() == OracleSimilarity::Mode::BinaryPairs
                      ? "annotated pairs"
                      : "equivalence classes";
  return fg;
}

double implied_epsilon(const FairnessGraph& fg, const OracleSimilarity& oracle) {
  if (oracle.is_binary()) return 1.0;
  if (fg.n_nodes != oracle.n())
    throw ContractError("fairness graph and oracle node counts differ");
  auto nbrs = fg.neighbor_lists();
  double eps = 0.0;
  for (std::size_t i = 0; i < fg.n_nodes; ++i) {
    std::vector<double> row = oracle.row(i);
    const auto& ni = nbrs[i];
    auto it = ni.begin();
    for (std::size_t j = i + 1; j < fg.n_nodes; ++j) {
      while (it != ni.end() && *it < j) ++it;
      bool connected = (it != ni.end() && *it == j);
      if (!connected) eps = std::max(eps, row[j]);
    }
  }
  return eps;
}

}  // namespace gfairhint
