#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>
#include <pathsgl/common.hpp>
#include <pathsgl/data_model.hpp>
#include <pathsgl/sgl_solver.hpp>

namespace pathsgl {

/// floor(N/2) distinct row indices (ascending), drawn from the substream (seed, "subsample", b).
std::vector<Index> subsample_indices(Index n, Index b, std::uint64_t seed);

/// Rows `rows` of `data`, with columns re-centered and re-scaled to unit sum
/// of squares and y re-centered. Columns constant within the subset are zeroed.
StandardizedData restandardize_rows(const StandardizedData& data, const std::vector<Index>& rows);

struct RankingConfig
{
    double alpha = 0.95;
    double lambda_fraction = 0.95; // lambda = fraction * lambda_max of each subsample
    std::vector<double> weights;
    Algorithm algorithm = Algorithm::Cgd;
    Index subsamples = 1000; // B
    std::uint64_t seed = 1;
    unsigned threads = 1;
    double tol = 1e-6;
};

struct RankingResult
{
    Index subsamples = 0;
    bool null = false;
    RankingConfig config;
    Vector pi_path; // per pathway
    Vector pi_snp;  // per feature (dense; zero entries were never selected)
    Vector pi_gene; // per gene
    double mean_pathways = 0.0, sd_pathways = 0.0;
    double mean_features = 0.0, sd_features = 0.0;
    Index nonconverged = 0; // subsample fits that hit an iteration cap
};

RankingResult rank_by_stability(const StandardizedData& data, const PathwayMap& map, const RankingConfig& config);

/// Same procedure with y permuted independently within every subsample.
RankingResult null_ranking(const StandardizedData& data, const PathwayMap& map, const RankingConfig& config);

struct Correlation
{
    double r = 0.0;
    double p_value = 1.0;
    Index n = 0;
    bool defined = true; // false when either vector is constant
};

/// Pearson r with a two-sided t-test p-value. Throws DegenerateVariance when
/// either vector is constant.
Correlation pearson(const Vector& a, const Vector& b);

struct BiasReport
{
    Correlation pathways;
    Correlation features; // over features with nonzero empirical frequency
};

BiasReport bias_diagnostics(const RankingResult& empirical, const RankingResult& null);

struct RankedItem
{
    std::string id;
    double frequency = 0.0;
    bool tied = false; // shares its frequency with a neighbour; order then falls back to the ID
    std::vector<std::string> genes;
};

enum class RankLevel
{
    Pathway,
    Feature,
    Gene,
};

/// Items sorted by descending frequency, ties by ascending ID. Features and
/// genes with zero frequency are left out; pathways are always all listed.
std::vector<RankedItem> ranked_items(const RankingResult& result, const PathwayMap& map, RankLevel level);

/// TSV: rank, id, frequency, tied [, genes] with a header line.
void write_ranking_tsv(const std::filesystem::path& path, const std::vector<RankedItem>& items, bool with_genes);

} // namespace pathsgl
