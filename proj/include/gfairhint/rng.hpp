#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "gfairhint/tensor.hpp"

namespace gfairhint {

/// Deterministic stream splitting: derive an independent seed for a named
/// subsystem so call-site ordering changes cannot perturb other streams.
std::uint64_t derive_seed(std::uint64_t master, const std::string& stream);

/// Glorot-uniform initialization for a fan_in x fan_out weight matrix.
Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

/// FNV-1a over raw bytes; used for dataset/config fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 14695981039346656037ull);
std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 14695981039346656037ull);

}  // namespace gfairhint
