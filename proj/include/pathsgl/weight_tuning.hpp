#pragma once
#include <cstdint>
#include <vector>
#include <pathsgl/common.hpp>
#include <pathsgl/data_model.hpp>

namespace pathsgl {

/// Index of the pathway with the largest entry penalty against `response`
/// (the first pathway to enter as lambda falls from lambda_max). Exact ties go
/// to the lowest index; `tie` is set when one occurred.
Index first_selected_pathway(
    const StandardizedData& data, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, const Vector& response, bool* tie = nullptr
);

/// Fraction of `permutations` phenotype permutations in which each pathway enters first.
/// Permutation r is drawn from the substream (seed, "first-selection", r).
Vector empirical_selection_distribution(
    const StandardizedData& data, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, Index permutations, std::uint64_t seed, unsigned threads = 1
);

/// One multiplicative update w_l <- w_l [1 - sign(d_l)(eta - 1) L^2 d_l^2],
/// d_l = pi_l - 1/L, with the factor clamped to [eta, 2 - eta].
std::vector<double> adjust_weights(const std::vector<double>& weights, const Vector& selection, double eta);

struct TuneOptions
{
    double alpha = 0.95;
    double eta = 0.5;
    double epsilon = 0.05;
    Index permutations = 500; // R per iteration
    int max_iters = 50;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct TuneIteration
{
    int iteration = 0;
    std::vector<double> weights; // weights used to produce `selection`
    Vector selection;
    Vector deviation;
    double total_deviation = 0.0;
};

struct TuneResult
{
    std::vector<double> weights; // converged weights, or the best iterate
    bool converged = false;
    int best_iteration = 0;
    std::vector<TuneIteration> trace;
};

/// Iterates the weight update until sum |d_l| < epsilon or `max_iters`,
/// drawing fresh permutations every iteration.
TuneResult tune_weights(
    const StandardizedData& data, const PathwayMap& map, const TuneOptions& opts,
    std::vector<double> initial_weights = {}
);

} // namespace pathsgl
