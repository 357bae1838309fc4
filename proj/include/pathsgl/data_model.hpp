#pragma once
#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>
#include <pathsgl/common.hpp>

namespace pathsgl {

/// Minor-allele counts, one row per sample and one column per feature (SNP).
/// Every entry is 0, 1 or 2; sample and feature IDs are unique.
struct GenotypeMatrix
{
    std::vector<std::string> samples;
    std::vector<std::string> snp_ids;
    Matrix values;

    Index n_samples() const { return samples.size(); }
    Index n_features() const { return snp_ids.size(); }

    /// Throws on any invariant violation (MissingValue, DuplicateId, shape).
    void validate() const;
};

/// Quantitative response with optional covariates; rows follow `samples`.
struct Phenotype
{
    std::vector<std::string> samples;
    Vector y;
    Matrix covariates; // N x C, C may be 0
    std::vector<std::string> covariate_names;

    void validate() const;
};

struct Pathway
{
    std::string id;
    std::vector<Index> members; // feature indices, ascending, duplicate-free
};

/// Features -> genes -> pathways. A feature may belong to several pathways.
struct PathwayMap
{
    std::vector<Pathway> pathways;
    std::vector<std::string> feature_ids;
    std::vector<std::string> gene_ids;
    std::vector<std::vector<Index>> snp_to_genes;     // per feature, gene indices
    std::vector<std::vector<Index>> gene_to_pathways; // per gene, pathway indices
    std::vector<std::string> warnings;

    Index n_pathways() const { return pathways.size(); }
    Index n_features() const { return feature_ids.size(); }
    Index n_genes() const { return gene_ids.size(); }

    /// Sum of pathway sizes (the overlap-expanded width).
    Index expanded_width() const;

    void validate() const;
};

/// Centered response and column-normalized design. Constant columns are
/// zeroed and flagged; callers exclude them from groups with `drop_features`.
struct StandardizedData
{
    std::vector<std::string> samples;
    std::vector<std::string> feature_ids;
    Matrix X;
    Vector y;
    Vector column_means;
    Vector column_norms; // sqrt of centered sum of squares before scaling
    std::vector<bool> constant;
    double y_mean = 0.0;
    Vector covariate_coefficients; // intercept first; empty when no covariates

    Index n_samples() const { return static_cast<Index>(X.rows()); }
    Index n_features() const { return static_cast<Index>(X.cols()); }
    std::vector<Index> constant_columns() const;
};

/// Column layout of the overlap-expanded design [X_1, ..., X_L].
struct ExpandedIndex
{
    std::vector<Index> offsets;  // size L+1; pathway l spans [offsets[l], offsets[l+1])
    std::vector<Index> back_map; // expanded column -> original feature

    Index width() const { return back_map.size(); }
    Index n_pathways() const { return offsets.empty() ? 0 : offsets.size() - 1; }
};

// ---- IO ---------------------------------------------------------------

GenotypeMatrix load_genotypes(const std::filesystem::path& path);
void write_genotypes(const std::filesystem::path& path, const GenotypeMatrix& genotype);

/// TSV with header `sample_id  y  [covariates...]`.
Phenotype load_phenotype(const std::filesystem::path& path);
void write_phenotype(const std::filesystem::path& path, const Phenotype& phenotype);

/// GMT-style: pathway_id TAB gene TAB gene ... (a description column is not expected).
std::vector<std::pair<std::string, std::vector<std::string>>>
load_gmt(const std::filesystem::path& path);

/// TSV: snp_id TAB gene_id per line.
std::vector<std::pair<std::string, std::string>>
load_snp_gene_map(const std::filesystem::path& path);

void write_gmt(const std::filesystem::path& path, const PathwayMap& map);
void write_snp_gene_map(const std::filesystem::path& path, const PathwayMap& map);

// ---- construction -----------------------------------------------------

/// Builds the feature -> gene -> pathway mapping over the feature universe
/// `feature_ids`. Features absent from the universe are ignored; genes with
/// no features are ignored; pathways left empty are dropped with a warning.
PathwayMap build_pathway_map(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& pathway_genes,
    const std::vector<std::pair<std::string, std::string>>& snp_gene_pairs,
    const std::vector<std::string>& feature_ids
);

PathwayMap load_pathway_annotation(
    const std::filesystem::path& gmt_path,
    const std::filesystem::path& snp_gene_path,
    const GenotypeMatrix& genotype
);

/// Removes the flagged features from every pathway; pathways that become
/// empty are dropped with a warning.
PathwayMap drop_features(const PathwayMap& map, const std::vector<bool>& excluded);

/// Aligns phenotype rows to genotype samples (by ID), residualizes y on an
/// intercept plus covariates when present, centers y, and scales each
/// centered column to unit sum of squares.
StandardizedData standardize(const GenotypeMatrix& genotype, const Phenotype& phenotype);

/// Same transformation on already-aligned raw arrays.
StandardizedData standardize_arrays(
    const Matrix& counts,
    const Vector& y,
    const Matrix& covariates = Matrix(),
    std::vector<std::string> samples = {},
    std::vector<std::string> feature_ids = {}
);

/// Reorders phenotype rows to follow `samples`; throws SampleMismatch if the sets differ.
Phenotype align_phenotype(const Phenotype& phenotype, const std::vector<std::string>& samples);

ExpandedIndex expand_overlaps(const PathwayMap& map);

} // namespace pathsgl
