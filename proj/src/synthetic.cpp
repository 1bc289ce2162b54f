#include "gfairhint/synthetic.hpp"

#include <random>

#include "gfairhint/error.hpp"
#include "gfairhint/rng.hpp"

namespace gfairhint {

namespace {

void check_prob(double p, const char* name) {
  if (p < 0.0 || p > 1.0)
    throw ConfigError(std::string("synthetic: ") + name +
                      " must lie in [0, 1]");
}

}  // namespace

SyntheticResult generate_synthetic(const SyntheticSpec& spec,
                                   const SplitSpec& split) {
  if (spec.n_communities < 2)
    throw ConfigError("synthetic: need at least two communities");
  if (spec.n_nodes < spec.n_communities)
    throw ConfigError("synthetic: fewer nodes than communities");
  if (spec.feature_dim == 0)
    throw ConfigError("synthetic: zero feature dimension");
  check_prob(spec.p_within, "p_within");
  check_prob(spec.p_between, "p_between");
  check_prob(spec.signal, "signal");
  check_prob(spec.label_alignment, "label_alignment");
  check_prob(spec.label_noise, "label_noise");

  std::size_t n = spec.n_nodes, kc = spec.n_communities;

  // contiguous community blocks; the remainder pads the leading blocks
  std::vector<std::int64_t> comm(n);
  for (std::size_t i = 0; i < n; ++i)
    comm[i] = static_cast<std::int64_t>(i * kc / n);

  // one-hot base plus jitter keeps centroids distinct even when communities
  // outnumber feature dimensions
  std::mt19937_64 centroid_rng(derive_seed(spec.seed, "synth-centroids"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> centroids(kc);
  for (std::size_t c = 0; c < kc; ++c) {
    centroids[c].resize(spec.feature_dim);
    for (std::size_t j = 0; j < spec.feature_dim; ++j)
      centroids[c][j] = 0.25 * gauss(centroid_rng);
    centroids[c][c % spec.feature_dim] += 1.0;
  }

  std::mt19937_64 edge_rng(derive_seed(spec.seed, "synth-edges"));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double p = comm[i] == comm[j] ? spec.p_within : spec.p_between;
      if (u01(edge_rng) < p) edges.push_back({i, j});
    }

  std::mt19937_64 feat_rng(derive_seed(spec.seed, "synth-features"));
  Tensor features({n, spec.feature_dim});
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centroids[static_cast<std::size_t>(comm[i])];
    for (std::size_t j = 0; j < spec.feature_dim; ++j)
      features(i, j) =
          spec.signal * c[j] + (1.0 - spec.signal) * gauss(feat_rng);
  }

  std::mt19937_64 label_rng(derive_seed(spec.seed, "synth-labels"));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto cl = static_cast<std::size_t>(comm[i]);
    if (u01(label_rng) >= spec.label_alignment) {
      // deliberate misalignment: any other community
      auto shift =
          1 + static_cast<std::size_t>(u01(label_rng) *
                                       static_cast<double>(kc - 1));
      cl = (cl + std::min(shift, kc - 1)) % kc;
    }
    if (spec.label_noise > 0.0 && u01(label_rng) < spec.label_noise)
      cl = static_cast<std::size_t>(u01(label_rng) * static_cast<double>(kc)) %
           kc;
    labels[i] = static_cast<int>(cl);
  }

  std::vector<SplitTag> tags = assign_split(n, split);
  SyntheticResult out{Graph(n, std::move(edges), std::move(features),
                            std::move(labels), std::move(tags)),
                      std::move(comm)};
  return out;
}

}  // namespace gfairhint
