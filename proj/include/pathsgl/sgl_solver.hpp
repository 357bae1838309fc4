#pragma once
#include <span>
#include <string_view>
#include <vector>
#include <pathsgl/common.hpp>
#include <pathsgl/data_model.hpp>

namespace pathsgl {

/// BCGD: pathways compete through block partial residuals.
/// CGD: every pathway is fit independently against the full response.
enum class Algorithm
{
    Bcgd,
    Cgd,
};

const char* to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

struct SglConfig
{
    double lambda = 0.0;
    double alpha = 0.95;
    std::vector<double> weights; // one per pathway; empty means all 1
    double tol = 1e-6;           // inner loop: max |change| of any coefficient in a sweep
    double outer_tol = 1e-5;     // BCGD pathway loop
    int max_inner_iters = 10000;
    int max_outer_iters = 1000;
    int max_halvings = 50;
    unsigned threads = 1;

    void validate(Index n_pathways) const;
    double weight(Index pathway) const { return weights.empty() ? 1.0 : weights[pathway]; }
};

struct InnerOptions
{
    double tol = 1e-6;
    int max_iters = 10000;
    int max_halvings = 50;
    bool record_trace = false;
};

/// Result of fitting one pathway's coefficient block.
struct BlockFit
{
    Vector beta;
    int iterations = 0;
    bool converged = true;
    bool gate_open = false;
    std::vector<double> objective_trace; // after the seed and after every sweep, when requested
};

inline double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

Vector soft_threshold(const Vector& z, double t);

/// ||S(X_l' r, alpha*lambda)||_2; the pathway enters when this exceeds (1-alpha)*lambda*w_l.
double pathway_selection_stat(const Matrix& X_l, const Vector& r, double alpha, double lambda);
double pathway_selection_stat(const Matrix& X, std::span<const Index> cols, const Vector& r, double alpha, double lambda);

/// 1/2||target - X_l b||^2 + (1-alpha) lambda w ||b||_2 + alpha lambda ||b||_1
double pathway_objective(
    const Matrix& X, std::span<const Index> cols, const Vector& target, const Vector& beta,
    double alpha, double lambda, double weight
);

/**
 * Minimizes the single-pathway objective by coordinate-wise Newton steps.
 *
 * Nonzero coordinates take a Newton step on the smooth part of the
 * subgradient; zero coordinates move only when both one-sided directional
 * derivatives agree in sign. A step that increases the objective is halved
 * (at most `max_halvings` times, after which the coordinate stays put). A
 * step that would cross zero stops at zero. When the whole block is zero the
 * iteration is seeded along S(X_l' r, alpha*lambda) with an exact line search,
 * since the Newton curvature is undefined there.
 *
 * `start` is a warm start; the gate is not evaluated here.
 */
BlockFit solve_block(
    const Matrix& X, std::span<const Index> cols, const Vector& target,
    double alpha, double lambda, double weight, Vector start, const InnerOptions& opts
);

/// Gate plus inner solve for one pathway regressed on `y`.
BlockFit fit_pathway_cgd(
    const Matrix& X, std::span<const Index> cols, const Vector& y,
    double alpha, double lambda, double weight, const InnerOptions& opts = {}
);

/// Dense-block overload: every column of X_l belongs to the pathway.
BlockFit fit_pathway_cgd(
    const Matrix& X_l, const Vector& y, double alpha, double lambda, double weight, const InnerOptions& opts = {}
);

struct PathwayCoefficients
{
    std::vector<Index> features; // original feature indices with nonzero coefficient
    std::vector<double> values;
};

struct SglFit
{
    Algorithm algorithm = Algorithm::Cgd;
    double lambda = 0.0;
    double alpha = 0.0;
    std::vector<Index> selected_pathways;          // ascending
    std::vector<PathwayCoefficients> coefficients; // one entry per pathway
    std::vector<Index> selected_features;          // union over selected pathways, ascending
    double objective = 0.0;
    int iterations = 0;                            // outer sweeps (BCGD) or max inner sweeps (CGD)
    std::vector<int> inner_iterations;             // per pathway
    bool converged = true;
    std::vector<Index> nonconverged_pathways;
    std::vector<double> outer_change_trace;        // BCGD: max coefficient change per sweep

    const std::vector<Index>& selected_features_in(Index pathway) const { return coefficients[pathway].features; }
};

SglFit fit_sgl_cgd(const StandardizedData& data, const PathwayMap& map, const SglConfig& config);
SglFit fit_sgl_bcgd(const StandardizedData& data, const PathwayMap& map, const ExpandedIndex& expanded, const SglConfig& config);
SglFit fit_sgl(const StandardizedData& data, const PathwayMap& map, const SglConfig& config, Algorithm algorithm);

/// BCGD: the overlap-expanded objective. CGD: 1/2||y||^2 plus, for every
/// pathway, the decrease of its own single-pathway objective from zero, so
/// that the all-zero fit scores 1/2||y||^2 under both algorithms.
double objective(const StandardizedData& data, const SglFit& fit, const SglConfig& config);

struct LassoOptions
{
    double tol = 1e-8;
    int max_iters = 100000;
};

struct LassoFit
{
    Vector beta;
    int iterations = 0;
    bool converged = true;

    Index nonzero_count() const;
};

/// Coordinate descent for 1/2||y - X b||^2 + lambda ||b||_1.
LassoFit fit_lasso(const Matrix& X, const Vector& y, double lambda, const LassoOptions& opts = {}, const Vector* warm_start = nullptr);
LassoFit fit_lasso(const StandardizedData& data, double lambda, const LassoOptions& opts = {});

double lasso_objective(const Matrix& X, const Vector& y, const Vector& beta, double lambda);

} // namespace pathsgl
