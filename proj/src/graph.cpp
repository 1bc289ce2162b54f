#include "gfairhint/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "gfairhint/error.hpp"
#include "gfairhint/rng.hpp"
#include "gfairhint/textio.hpp"

namespace gfairhint {

const char* split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
    default: return "none";
  }
}

SplitSpec SplitSpec::fractions(double train, double val, double test,
                               std::uint64_t seed) {
  SplitSpec s;
  s.mode = Mode::Fractions;
  s.train = train;
  s.val = val;
  s.test = test;
  s.seed = seed;
  return s;
}

SplitSpec SplitSpec::from_file(std::string path) {
  SplitSpec s;
  s.mode = Mode::File;
  s.file = std::move(path);
  return s;
}

std::vector<std::pair<std::size_t, std::size_t>> canonical_edges(
    const std::vector<std::pair<std::size_t, std::size_t>>& raw,
    std::size_t* dropped_self, std::size_t* dropped_dup) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(raw.size());
  std::size_t self_count = 0;
  for (auto [a, b] : raw) {
    if (a == b) {
      ++self_count;
      continue;
    }
    out.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(out.begin(), out.end());
  std::size_t before = out.size();
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (dropped_self) *dropped_self = self_count;
  if (dropped_dup) *dropped_dup = before - out.size();
  return out;
}

CsrMatrix adjacency_from_edges(
    std::size_t n,
    const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::size_t> rows, cols;
  std::vector<double> vals;
  rows.reserve(edges.size() * 2);
  cols.reserve(edges.size() * 2);
  vals.reserve(edges.size() * 2);
  for (auto [i, j] : edges) {
    rows.push_back(i); cols.push_back(j); vals.push_back(1.0);
    rows.push_back(j); cols.push_back(i); vals.push_back(1.0);
  }
  return CsrMatrix::from_coo(n, n, rows, cols, vals);
}

CsrMatrix normalized_adjacency_csr(
    std::size_t n,
    const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<double> deg(n, 1.0);  // self-loop contributes 1 to every row
  for (auto [i, j] : edges) {
    if (i >= n || j >= n) throw ShapeError("edge endpoint out of range");
    deg[i] += 1.0;
    deg[j] += 1.0;
  }
  std::vector<std::size_t> rows, cols;
  std::vector<double> vals;
  rows.reserve(edges.size() * 2 + n);
  cols.reserve(edges.size() * 2 + n);
  vals.reserve(edges.size() * 2 + n);
  for (std::size_t i = 0; i < n; ++i) {
    rows.push_back(i);
    cols.push_back(i);
    vals.push_back(1.0 / deg[i]);
  }
  for (auto [i, j] : edges) {
    double v = 1.0 / std::sqrt(deg[i] * deg[j]);
    rows.push_back(i); cols.push_back(j); vals.push_back(v);
    rows.push_back(j); cols.push_back(i); vals.push_back(v);
  }
  return CsrMatrix::from_coo(n, n, rows, cols, vals);
}

std::vector<SplitTag> assign_split(std::size_t n, const SplitSpec& spec) {
  std::vector<SplitTag> tags(n, SplitTag::None);
  switch (spec.mode) {
    case SplitSpec::Mode::None:
      return tags;
    case SplitSpec::Mode::File:
      throw ContractError("assign_split: File mode is resolved during load");
    case SplitSpec::Mode::Explicit: {
      auto apply = [&](const std::vector<std::uint64_t>& ids, SplitTag tag) {
        for (std::uint64_t id : ids) {
          if (id >= n) throw IngestError("split id out of range");
          if (tags[id] != SplitTag::None)
            throw ConfigError("split lists are not disjoint at node " +
                              std::to_string(id));
          tags[id] = tag;
        }
      };
      apply(spec.train_ids, SplitTag::Train);
      apply(spec.val_ids, SplitTag::Val);
      apply(spec.test_ids, SplitTag::Test);
      return tags;
    }
    case SplitSpec::Mode::Fractions: {
      if (spec.train < 0 || spec.val < 0 || spec.test < 0 ||
          spec.train + spec.val + spec.test > 1.0 + 1e-12)
        throw ConfigError("split fractions must be non-negative and sum to <= 1");
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(derive_seed(spec.seed, "split"));
      std::shuffle(order.begin(), order.end(), rng);
      auto n_train = static_cast<std::size_t>(std::llround(spec.train * n));
      auto n_val = static_cast<std::size_t>(std::llround(spec.val * n));
      auto n_test = static_cast<std::size_t>(std::llround(spec.test * n));
      n_train = std::min(n_train, n);
      n_val = std::min(n_val, n - n_train);
      n_test = std::min(n_test, n - n_train - n_val);
      for (std::size_t k = 0; k < n_train; ++k) tags[order[k]] = SplitTag::Train;
      for (std::size_t k = 0; k < n_val; ++k)
        tags[order[n_train + k]] = SplitTag::Val;
      for (std::size_t k = 0; k < n_test; ++k)
        tags[order[n_train + n_val + k]] = SplitTag::Test;
      return tags;
    }
  }
  return tags;
}

Graph::Graph(std::size_t n_nodes,
             std::vector<std::pair<std::size_t, std::size_t>> edges,
             Tensor features, std::vector<int> labels,
             std::vector<SplitTag> split)
    : n_(n_nodes), features_(std::move(features)), labels_(std::move(labels)) {
  edges_ = canonical_edges(edges);
  for (auto [i, j] : edges_)
    if (j >= n_) throw IngestError("edge endpoint " + std::to_string(j) +
                                   " out of range for n=" + std::to_string(n_));
  if (features_.ndim() != 2 || features_.rows() != n_)
    throw IngestError("feature matrix must have one row per node");
  if (labels_.empty()) labels_.assign(n_, -1);
  if (labels_.size() != n_)
    throw IngestError("label vector length must equal node count");
  int max_label = -1;
  for (int l : labels_) {
    if (l < -1) throw IngestError("labels must be >= 0 (or -1 for unlabeled)");
    max_label = std::max(max_label, l);
  }
  n_classes_ = static_cast<std::size_t>(max_label + 1);
  split_ = std::move(split);
  if (split_.empty()) split_.assign(n_, SplitTag::None);
  if (split_.size() != n_)
    throw IngestError("split vector length must equal node count");
  adj_ = adjacency_from_edges(n_, edges_);
}

std::vector<std::size_t> Graph::split_ids(SplitTag tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_; ++i)
    if (split_[i] == tag) out.push_back(i);
  return out;
}

const CsrMatrix& Graph::normalized_adjacency() const {
  if (!norm_adj_)
    norm_adj_ = std::make_shared<CsrMatrix>(normalized_adjacency_csr(n_, edges_));
  return *norm_adj_;
}

Tensor Graph::normalized_adjacency_dense() const {
  return normalized_adjacency().to_dense();
}

const CsrMatrix& Graph::mean_adjacency() const {
  if (!mean_adj_) {
    std::vector<double> deg(n_, 0.0);
    for (auto [i, j] : edges_) {
      deg[i] += 1.0;
      deg[j] += 1.0;
    }
    std::vector<std::size_t> rows, cols;
    std::vector<double> vals;
    for (auto [i, j] : edges_) {
      rows.push_back(i); cols.push_back(j); vals.push_back(1.0 / deg[i]);
      rows.push_back(j); cols.push_back(i); vals.push_back(1.0 / deg[j]);
    }
    mean_adj_ = std::make_shared<CsrMatrix>(
        CsrMatrix::from_coo(n_, n_, rows, cols, vals));
  }
  return *mean_adj_;
}

std::vector<std::vector<std::size_t>> Graph::neighbor_lists() const {
  std::vector<std::vector<std::size_t>> nbrs(n_);
  for (auto [i, j] : edges_) {
    nbrs[i].push_back(j);
    nbrs[j].push_back(i);
  }
  for (auto& l : nbrs) std::sort(l.begin(), l.end());
  return nbrs;
}

std::uint64_t Graph::fingerprint() const {
  std::uint64_t h = fnv1a("graph-v1");
  h = fnv1a(&n_, sizeof(n_), h);
  for (auto [i, j] : edges_) {
    h = fnv1a(&i, sizeof(i), h);
    h = fnv1a(&j, sizeof(j), h);
  }
  auto span = features_.data();
  h = fnv1a(span.data(), span.size() * sizeof(double), h);
  if (!labels_.empty())
    h = fnv1a(labels_.data(), labels_.size() * sizeof(int), h);
  return h;
}

namespace {

struct ParsedEdges {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
};

ParsedEdges parse_edge_file(const std::string& path) {
  ParsedEdges out;
  for (const std::string& line : read_data_lines(path)) {
    auto f = split_fields(line);
    if (f.size() < 2)
      throw IngestError(path + ": edge line needs two ids: '" + line + "'");
    out.raw.emplace_back(parse_u64(f[0], path), parse_u64(f[1], path));
  }
  return out;
}

}  // namespace

Graph Graph::load(const std::string& edge_file, const std::string& feature_file,
                  const std::string& label_file, const SplitSpec& split,
                  LoadReport* report) {
  ParsedEdges parsed = parse_edge_file(edge_file);

  std::vector<std::pair<std::uint64_t, int>> raw_labels;
  if (!label_file.empty()) {
    for (const std::string& line : read_data_lines(label_file)) {
      auto f = split_fields(line);
      if (f.size() < 2)
        throw IngestError(label_file + ": label line needs id and class");
      std::uint64_t cls = parse_u64(f[1], label_file);
      raw_labels.emplace_back(parse_u64(f[0], label_file),
                              static_cast<int>(cls));
    }
  }

  std::vector<std::pair<std::uint64_t, SplitTag>> raw_split;
  if (split.mode == SplitSpec::Mode::File) {
    for (const std::string& line : read_data_lines(split.file)) {
      auto f = split_fields(line);
      if (f.size() < 2)
        throw IngestError(split.file + ": split line needs id and tag");
      SplitTag tag;
      if (f[1] == "train") tag = SplitTag::Train;
      else if (f[1] == "val") tag = SplitTag::Val;
      else if (f[1] == "test") tag = SplitTag::Test;
      else throw IngestError(split.file + ": unknown split tag '" + f[1] + "'");
      raw_split.emplace_back(parse_u64(f[0], split.file), tag);
    }
  }

  // features: "n d" header then n rows
  auto flines = read_data_lines(feature_file);
  if (flines.empty()) throw IngestError(feature_file + ": missing header");
  auto header = split_fields(flines[0]);
  if (header.size() != 2)
    throw IngestError(feature_file + ": header must be 'n d'");
  std::size_t n = parse_u64(header[0], feature_file);
  std::size_t d = parse_u64(header[1], feature_file);
  if (n == 0) throw IngestError(feature_file + ": empty graph");
  if (flines.size() != n + 1)
    throw IngestError(feature_file + ": expected " + std::to_string(n) +
                      " feature rows, found " + std::to_string(flines.size() - 1));
  Tensor features({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto f = split_fields(flines[i + 1]);
    if (f.size() != d)
      throw IngestError(feature_file + ": row " + std::to_string(i) + " has " +
                        std::to_string(f.size()) + " values, expected " +
                        std::to_string(d));
    for (std::size_t j = 0; j < d; ++j)
      features(i, j) = parse_double(f[j], feature_file);
  }
  features.validate_finite(feature_file);

  // node universe: dense 0..n-1 if every referenced id fits, else re-index
  std::set<std::uint64_t> referenced;
  for (auto [a, b] : parsed.raw) {
    referenced.insert(a);
    referenced.insert(b);
  }
  for (auto& [id, cls] : raw_labels) referenced.insert(id);
  for (auto& [id, tag] : raw_split) referenced.insert(id);
  for (std::uint64_t id : split.train_ids) referenced.insert(id);
  for (std::uint64_t id : split.val_ids) referenced.insert(id);
  for (std::uint64_t id : split.test_ids) referenced.insert(id);

  bool dense = referenced.empty() || *referenced.rbegin() < n;
  std::map<std::uint64_t, std::size_t> remap;
  std::vector<std::uint64_t> original_ids;
  if (dense) {
    original_ids.resize(n);
    std::iota(original_ids.begin(), original_ids.end(), 0);
  } else {
    if (referenced.size() != n)
      throw IngestError(edge_file + ": " + std::to_string(referenced.size()) +
                        " distinct node ids referenced but the feature file "
                        "provides " + std::to_string(n) + " rows");
    for (std::uint64_t id : referenced) {
      remap[id] = original_ids.size();
      original_ids.push_back(id);
    }
  }
  auto map_id = [&](std::uint64_t id, const std::string& ctx) -> std::size_t {
    if (dense) {
      if (id >= n)
        throw IngestError(ctx + ": node id " + std::to_string(id) +
                          " has no feature row (n=" + std::to_string(n) + ")");
      return static_cast<std::size_t>(id);
    }
    return remap.at(id);
  };

  std::vector<std::pair<std::size_t, std::size_t>> mapped;
  mapped.reserve(parsed.raw.size());
  std::set<std::pair<std::size_t, std::size_t>> directed;
  for (auto [a, b] : parsed.raw) {
    std::size_t i = map_id(a, edge_file), j = map_id(b, edge_file);
    mapped.emplace_back(i, j);
    if (i != j) directed.insert({i, j});
  }
  std::size_t dropped_self = 0, dropped_dup = 0;
  auto edges = canonical_edges(mapped, &dropped_self, &dropped_dup);

  std::vector<int> labels(n, -1);
  for (auto& [id, cls] : raw_labels) labels[map_id(id, label_file)] = cls;

  std::vector<SplitTag> tags;
  if (split.mode == SplitSpec::Mode::File) {
    tags.assign(n, SplitTag::None);
    for (auto& [id, tag] : raw_split) tags[map_id(id, split.file)] = tag;
  } else if (split.mode == SplitSpec::Mode::Explicit) {
    SplitSpec mapped_spec = split;
    mapped_spec.train_ids.clear();
    mapped_spec.val_ids.clear();
    mapped_spec.test_ids.clear();
    for (auto id : split.train_ids)
      mapped_spec.train_ids.push_back(map_id(id, "split"));
    for (auto id : split.val_ids)
      mapped_spec.val_ids.push_back(map_id(id, "split"));
    for (auto id : split.test_ids)
      mapped_spec.test_ids.push_back(map_id(id, "split"));
    tags = assign_split(n, mapped_spec);
  } else {
    tags = assign_split(n, split);
  }

  if (report) {
    report->self_loops_dropped = dropped_self;
    report->duplicate_edge_lines =
        (parsed.raw.size() - dropped_self) - directed.size();
    report->one_directional_lines = 0;
    for (auto [i, j] : edges)
      if (directed.count({i, j}) + directed.count({j, i}) == 1)
        ++report->one_directional_lines;
    report->reindexed = !dense;
    report->original_ids = std::move(original_ids);
  }

  return Graph(n, std::move(edges), std::move(features), std::move(labels),
               std::move(tags));
}

void Graph::save(const std::string& edge_file, const std::string& feature_file,
                 const std::string& label_file,
                 const std::string& split_file) const {
  {
    auto out = open_for_write(edge_file);
    for (auto [i, j] : edges_) out << i << '\t' << j << '\n';
  }
  {
    auto out = open_for_write(feature_file);
    out << n_ << ' ' << features_.cols() << '\n';
    for (std::size_t i = 0; i < n_; ++i) {
      auto row = features_.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ' ';
        out << format_double(row[j]);
      }
      out << '\n';
    }
  }
  if (!label_file.empty()) {
    auto out = open_for_write(label_file);
    for (std::size_t i = 0; i < n_; ++i)
      if (labels_[i] >= 0) out << i << '\t' << labels_[i] << '\n';
  }
  if (!split_file.empty()) {
    auto out = open_for_write(split_file);
    for (std::size_t i = 0; i < n_; ++i)
      if (split_[i] != SplitTag::None)
        out << i << '\t' << split_tag_name(split_[i]) << '\n';
  }
}

}  // namespace gfairhint
