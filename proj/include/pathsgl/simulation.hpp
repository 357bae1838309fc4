#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>
#include <pathsgl/common.hpp>
#include <pathsgl/data_model.hpp>

namespace pathsgl {

struct SimulatedGenotypes
{
    GenotypeMatrix genotype;
    Vector maf;
};

/// HWE genotypes: per feature m ~ U[maf_low, maf_high], counts 0/1/2 with
/// probabilities ((1-m)^2, 2m(1-m), m^2). Feature j uses the substream (seed, "genotype", j).
SimulatedGenotypes simulate_genotypes(Index n, Index p, double maf_low, double maf_high, std::uint64_t seed);

/// `p / n_pathways` consecutive features per pathway, no overlap.
/// Genes are runs of `gene_size` consecutive features.
PathwayMap build_study1_pathways(Index p = 2500, Index n_pathways = 50, Index gene_size = 5);

/// Chain topology: pathway l covers features [l*(size-overlap), l*(size-overlap)+size).
PathwayMap build_study2_pathways(Index n_pathways = 50, Index size = 30, Index overlap = 10, Index gene_size = 5);

struct CausalSet
{
    std::vector<Index> features; // ascending
    std::vector<Index> pathways; // pathways containing at least one causal feature, ascending
    Index anchor = 0;            // drawn pathway (Study 1 enriched) or first of the adjacent pair (Study 2)
};

/// Enriched: `n_causal` features from one uniformly chosen pathway; otherwise uniform over all features.
CausalSet choose_causal_study1(const PathwayMap& map, Index n_causal, bool enriched, std::uint64_t seed);

/// Features from (G_l \ G_{l-1}) u (G_{l+1} \ G_{l+2}) for a uniformly chosen adjacent pair (l, l+1).
/// Missing neighbours at the chain ends count as empty.
CausalSet choose_causal_study2(const PathwayMap& map, Index n_causal, std::uint64_t seed);

/// Candidate pool used by choose_causal_study2 for pair (l, l+1).
std::vector<Index> study2_eligible_pool(const PathwayMap& map, Index l);

struct Effect
{
    Vector y;
    double delta = 0.0;
};

/// y* = y + delta * sum_k x_k / |S| on raw counts, delta = |S| gamma E(y) / (2 sum_k m_k).
Effect inject_effects(const Vector& y_base, const Matrix& counts, const std::vector<Index>& causal, double gamma, const Vector& maf, double expected_y = 10.0);

struct SelectionMetrics
{
    double pathway_power = 0.0;
    double pathway_fpr = 0.0;
    double feature_power = 0.0;
    double feature_fpr = 0.0;
};

/// power = |sel n true| / |true|; FPR = |sel \ true| / |sel|, 0 for an empty selection.
/// Throws EmptyTruth when a truth set is empty.
SelectionMetrics power_fpr(
    const std::vector<Index>& selected_pathways, const std::vector<Index>& true_pathways,
    const std::vector<Index>& selected_features, const std::vector<Index>& true_features
);

struct StudyConfig
{
    int study = 1;
    Index n = 400;
    Index p = 2500;            // Study 1 only
    Index n_pathways = 50;
    Index pathway_size = 30;   // Study 2 only
    Index overlap = 10;        // Study 2 only
    Index gene_size = 5;
    Index n_causal = 5;
    bool enriched = true;      // Study 1 only
    std::vector<double> gammas{0.04, 0.08, 0.12};
    Index replicates = 100;
    double lambda_fraction = 0.85;
    double alpha = 0.8;
    double maf_low = 0.1, maf_high = 0.5;
    double y_mean = 10.0, y_sd = 1.0;
    std::uint64_t seed = 1;
    unsigned threads = 1;

    static StudyConfig defaults(int study);
    void validate() const;
};

struct ReplicateRecord
{
    double gamma = 0.0;
    Index replicate = 0;
    std::string method;
    SelectionMetrics metrics;
    Index n_pathways = 0;
    Index n_features = 0;
    Index causal_features_hit = 0;
    double lambda = 0.0;
    bool converged = true;
    bool exact_match = true; // lasso cardinality matched exactly (Study 1 lasso rows)
};

struct MethodSummary
{
    double gamma = 0.0;
    std::string method;
    Index replicates = 0;
    double mean_pathway_power = 0.0, mean_pathway_fpr = 0.0;
    double mean_feature_power = 0.0, mean_feature_fpr = 0.0;
    double mean_pathways = 0.0, mean_features = 0.0;
    std::vector<Index> power_histogram; // replicates recovering 0..|S| causal features
    Index nonconverged = 0;
    Index inexact_matches = 0;
};

struct StudyReport
{
    StudyConfig config;
    std::vector<ReplicateRecord> records;
    std::vector<MethodSummary> summaries;
    std::vector<std::string> failures;

    const MethodSummary& summary(double gamma, const std::string& method) const;
};

/// SGL (BCGD) against a cardinality-matched lasso.
StudyReport run_study1(const StudyConfig& config);
/// SGL-BCGD against SGL-CGD on the overlapping chain.
StudyReport run_study2(const StudyConfig& config);
StudyReport run_study(const StudyConfig& config);

/// One replicate's dataset as used by the study runner (before effects are fit).
struct StudyDataset
{
    SimulatedGenotypes genotypes;
    PathwayMap map;
    CausalSet causal;
    Effect effect;
};

StudyDataset make_study_dataset(const StudyConfig& config, double gamma, Index replicate);

void write_study_tsv(const std::filesystem::path& path, const StudyReport& report);

} // namespace pathsgl
