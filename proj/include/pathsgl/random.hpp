#pragma once
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>
#include <pathsgl/common.hpp>

namespace pathsgl {

using Rng = std::mt19937_64;

/// Derives an independent seed for a named substream and task index.
/// Same (master, stream, index) always yields the same seed, so results do
/// not depend on which worker thread runs a task.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0)
{
    return Rng(derive_seed(master, stream, index));
}

/// Uniform random permutation of 0..n-1.
std::vector<Index> random_permutation(Index n, Rng& rng);

/// `k` distinct indices drawn without replacement from 0..n-1, returned ascending.
std::vector<Index> sample_without_replacement(Index n, Index k, Rng& rng);

} // namespace pathsgl
