#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace graphrank {

using Rng = std::mt19937_64;

/// Seed used when neither a flag nor GRAPH_RANK_SEED supplies one.
inline constexpr std::uint64_t kDefaultSeed = 20230601;

/// Independent generator for the stream identified by (seed, ids...). Every
/// replicate derives its own stream this way, so results never depend on the
/// order in which replicates run.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids);

/// GRAPH_RANK_SEED from the environment, else kDefaultSeed.
std::uint64_t seed_from_environment();

}  // namespace graphrank
