#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>
#include <pathsgl/common.hpp>

namespace pathsgl {

/// Ranks over a shared universe. Ranked variables hold 1..n_ranked; the rest hold `fill`.
struct RankArray
{
    std::vector<Index> rank;
    std::vector<bool> ranked;
    Index fill = 0;

    Index size() const { return rank.size(); }
    Index n_ranked() const;

    /// Full ranking from a permutation: rank[i] = values[i], all ranked.
    static RankArray full(std::vector<Index> ranks);
};

struct RankPair
{
    std::vector<std::string> universe; // A's order, then IDs only in B
    RankArray tau;
    RankArray sigma;
    Index p_star = 0; // |A u B|, also the fill rank
    Index k_max = 0;  // min(|A|, |B|)
};

/// Builds both rank arrays from ID lists ordered best first. Throws DuplicateId.
RankPair build_rank_arrays(const std::vector<std::string>& list_a, const std::vector<std::string>& list_b);

/// Top-k Canberra distance with ranks capped at k + 1.
double canberra_topk(const RankArray& tau, const RankArray& sigma, Index k);

/// Ca(k) for every k in [k_min, k_max] in one pass.
std::vector<double> canberra_profile(const RankArray& tau, const RankArray& sigma, Index k_min, Index k_max);

/// Monte Carlo mean of Ca(k) over `pairs` pairs of uniform random permutations of 1..p.
double expected_canberra(Index k, Index p, Index pairs, std::uint64_t seed);
std::vector<double> expected_canberra_profile(Index k_min, Index k_max, Index p, Index pairs, std::uint64_t seed, unsigned threads = 1);

/// Ca / expected. Throws ZeroExpectation when expected == 0 and Ca != 0.
double normalized_canberra(const RankArray& tau, const RankArray& sigma, Index k, double expected);

/// p*(k) = (1/Z) sum 1{Ca(k, tau, sigma) <= Ca(k, tau, sigma^pi)}, where sigma^pi
/// shuffles sigma's ranks among its ranked variables.
std::vector<double> permutation_pvalues(
    const RankArray& tau, const RankArray& sigma, Index k_min, Index k_max, Index permutations,
    std::uint64_t seed, unsigned threads = 1
);

/// Benjamini-Hochberg q-values in input order. Throws OutOfRange for p outside [0, 1].
std::vector<double> bh_qvalues(const std::vector<double>& pvalues);

struct MeanRank
{
    Index index = 0; // position in the universe
    Index tau = 0;
    Index sigma = 0;
    double mean = 0.0;
};

/// Members of both top-k lists, ordered by mean rank (ties by universe position).
std::vector<MeanRank> consensus_set(const RankArray& tau, const RankArray& sigma, Index k);

struct MeanRankSummary
{
    std::vector<MeanRank> entries;
    bool empty_intersection = false;
};

/// Mean ranks over variables ranked in both arrays, ascending.
MeanRankSummary mean_rank_summary(const RankArray& tau, const RankArray& sigma);

struct CompareOptions
{
    Index k_min = 1;
    Index k_max = 0;         // 0 means min(|A|, |B|)
    Index expected_pairs = 1000; // M
    Index permutations = 1000;   // Z
    Index consensus_k = 0;   // 0 means the argmin k
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct RankComparison
{
    std::vector<std::string> universe;
    Index size_a = 0, size_b = 0, p_star = 0, intersection = 0;
    std::vector<Index> k;
    std::vector<double> ca, expected, ca_star, p_value, q_value;
    Index argmin_k = 0;
    Index consensus_k = 0;
    std::vector<MeanRank> consensus;
    MeanRankSummary mean_ranks;
};

RankComparison compare_rankings(const std::vector<std::string>& list_a, const std::vector<std::string>& list_b, const CompareOptions& opts);

/// Reads a ranked list: either one ID per line in rank order, or `id rank`
/// (two columns, any order). A first line whose rank column is not a number is a header.
std::vector<std::string> load_ranked_list(const std::filesystem::path& path);

} // namespace pathsgl
