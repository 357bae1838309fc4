#pragma once
#include <vector>
#include <pathsgl/common.hpp>
#include <pathsgl/data_model.hpp>
#include <pathsgl/sgl_solver.hpp>

namespace pathsgl {

/// Penalties at which pathways enter the model when starting from the empty fit.
struct LambdaGrid
{
    double lambda_max = 0.0;
    Index argmax = 0;                // pathway attaining lambda_max (lowest index on ties)
    std::vector<double> lambda_star; // max_j |x_j'y| / alpha; +inf when alpha == 0
    std::vector<double> lambda_min;  // entry penalty per pathway
};

struct RootOptions
{
    double abs_tol = 1e-10;
    int max_iters = 200;
};

/// max_j |z_j| / alpha over the pathway's correlations z = X_l'y. Throws AlphaZero for alpha == 0.
double lambda_star(const Vector& correlations, double alpha);
double lambda_star(const Matrix& X_l, const Vector& y, double alpha);

/**
 * Entry penalty of one pathway from its correlations z = X_l'y: the root in
 * (0, lambda*] of ||S(z, alpha*lambda)||^2 - (1-alpha)^2 lambda^2 w^2.
 * alpha == 0 gives ||z|| / w and alpha == 1 gives max|z|; z == 0 gives 0.
 */
double lambda_min_from_correlations(const Vector& correlations, double alpha, double weight, const RootOptions& opts = {});
double lambda_min_for_pathway(const Matrix& X_l, const Vector& y, double alpha, double weight, const RootOptions& opts = {});

/// Entry penalties for every pathway of `map` against response `y` (columns of X index features).
LambdaGrid lambda_grid(
    const Matrix& X, const Vector& y, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, unsigned threads = 1, const RootOptions& opts = {}
);
LambdaGrid lambda_grid(
    const StandardizedData& data, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, unsigned threads = 1
);

double lambda_max(const StandardizedData& data, const PathwayMap& map, double alpha, const std::vector<double>& weights);

/// Smallest lasso penalty with an all-zero solution: max_j |x_j'y|.
double lasso_lambda_max(const Matrix& X, const Vector& y);

struct CardinalityOptions
{
    int grid_steps = 400;
    double min_fraction = 0.01;
    int refine_steps = 50;
    LassoOptions lasso;
};

struct CardinalityMatch
{
    double lambda = 0.0;
    Vector beta;
    Index count = 0;
    bool exact = true;
    int grid_index = 0; // grid point where the scan stopped
    bool refined = false;
    bool nonmonotone = false; // cardinality decreased somewhere along the scanned grid
};

/**
 * Scans a descending log grid of lasso penalties (warm started) for the first
 * solution with exactly `target` nonzeros. If the grid steps over the target,
 * the bracketing interval is bisected; if no exact match is found the first
 * solution with more than `target` nonzeros is returned and `exact` is false.
 */
CardinalityMatch match_lasso_cardinality(const Matrix& X, const Vector& y, Index target, const CardinalityOptions& opts = {});
CardinalityMatch match_lasso_cardinality(const StandardizedData& data, Index target, const CardinalityOptions& opts = {});

} // namespace pathsgl
