#pragma once

#include <cstdint>
#include <vector>

#include "gfairhint/graph.hpp"

namespace gfairhint {

// Stochastic block model at desk scale. Features interpolate between pure
// noise and the community centroid; labels follow the community up to the
// alignment probability plus an independent uniform-noise flip.
struct SyntheticSpec {
  std::size_t n_nodes = 600;
  std::size_t n_communities = 3;
  double p_within = 0.05;
  double p_between = 0.005;
  std::size_t feature_dim = 16;
  double signal = 0.8;           // 0: features carry no community information
  double label_alignment = 1.0;  // probability a label equals its community
  double label_noise = 0.0;      // post-hoc uniform relabel probability
  std::uint64_t seed = 0;
};

struct SyntheticResult {
  Graph graph;
  // ground-truth communities; the similarity annotation, independent of the
  // (possibly noisy) classification labels
  std::vector<std::int64_t> communities;
};

SyntheticResult generate_synthetic(const SyntheticSpec& spec,
                                   const SplitSpec& split);

}  // namespace gfairhint
