#include <pathsgl/weight_tuning.hpp>
#include <pathsgl/parallel.hpp>
#include <pathsgl/penalty.hpp>
#include <pathsgl/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace pathsgl {

namespace {

Index argmax_entry(const Vector& xty, const PathwayMap& map, double alpha, const std::vector<double>& weights, bool* tie)
{
    Index best = 0;
    double best_value = -1.0;
    bool tied = false;
    for (Index l = 0; l < map.n_pathways(); ++l) {
        const auto& members = map.pathways[l].members;
        Vector z(static_cast<Eigen::Index>(members.size()));
        for (std::size_t k = 0; k < members.size(); ++k) z(static_cast<Eigen::Index>(k)) = xty(static_cast<Eigen::Index>(members[k]));
        const double v = lambda_min_from_correlations(z, alpha, weights.empty() ? 1.0 : weights[l]);
        if (v > best_value) {
            best_value = v;
            best = l;
            tied = false;
        } else if (v == best_value) {
            tied = true;
        }
    }
    if (tie) *tie = tied;
    return best;
}

} // namespace

Index first_selected_pathway(
    const StandardizedData& data, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, const Vector& response, bool* tie
)
{
    require(map.n_pathways() > 0, ErrorCode::InvalidArgument, "no pathways");
    require(response.size() == data.X.rows(), ErrorCode::InvalidArgument, "response length mismatch");
    require(weights.empty() || weights.size() == map.n_pathways(), ErrorCode::InvalidArgument, "weights length mismatch");
    const Vector xty = data.X.transpose() * response;
    return argmax_entry(xty, map, alpha, weights, tie);
}

Vector empirical_selection_distribution(
    const StandardizedData& data, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, Index permutations, std::uint64_t seed, unsigned threads
)
{
    require(permutations >= 1, ErrorCode::InvalidArgument, "need at least one permutation");
    require(map.n_pathways() > 0, ErrorCode::InvalidArgument, "no pathways");
    const Index L = map.n_pathways();
    std::vector<Index> winner(permutations);
    parallel_for(permutations, threads, [&](std::size_t r) {
        auto rng = make_rng(seed, "first-selection", r);
        const auto perm = random_permutation(static_cast<Index>(data.y.size()), rng);
        Vector yr(data.y.size());
        for (Eigen::Index i = 0; i < yr.size(); ++i) yr(i) = data.y(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
        winner[r] = first_selected_pathway(data, map, alpha, weights, yr);
    });
    Vector counts = Vector::Zero(static_cast<Eigen::Index>(L));
    for (Index w : winner) counts(static_cast<Eigen::Index>(w)) += 1.0;
    return counts / static_cast<double>(permutations);
}

std::vector<double> adjust_weights(const std::vector<double>& weights, const Vector& selection, double eta)
{
    require(eta > 0.0 && eta < 1.0, ErrorCode::InvalidArgument, "eta must lie in (0, 1)");
    const auto L = static_cast<double>(weights.size());
    require(selection.size() == static_cast<Eigen::Index>(weights.size()), ErrorCode::InvalidArgument, "selection length mismatch");
    std::vector<double> out(weights.size());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        // t = L d_l; the factor is 1 + (1 - eta) t^2 above target and 1 - (1 - eta) t^2 below it
        const double t = L * selection(static_cast<Eigen::Index>(l)) - 1.0;
        if (t == 0.0) {
            out[l] = weights[l];
            continue;
        }
        double factor = t > 0.0 ? 1.0 + (1.0 - eta) * t * t : eta + (1.0 - eta) * (1.0 - t * t);
        factor = std::clamp(factor, eta, 2.0 - eta);
        out[l] = weights[l] * factor;
    }
    return out;
}

TuneResult tune_weights(const StandardizedData& data, const PathwayMap& map, const TuneOptions& opts, std::vector<double> weights)
{
    const Index L = map.n_pathways();
    require(L > 0, ErrorCode::InvalidArgument, "no pathways");
    require(opts.eta > 0.0 && opts.eta < 1.0, ErrorCode::InvalidArgument, "eta must lie in (0, 1)");
    require(opts.epsilon > 0.0, ErrorCode::InvalidArgument, "epsilon must be positive");
    require(opts.permutations >= 1 && opts.max_iters >= 1, ErrorCode::InvalidArgument, "need R >= 1 and max_iters >= 1");
    if (weights.empty()) weights.assign(L, 1.0);
    require(weights.size() == L, ErrorCode::InvalidArgument, "initial weights length mismatch");

    TuneResult result;
    double best = std::numeric_limits<double>::infinity();
    for (int tau = 0; tau < opts.max_iters; ++tau) {
        TuneIteration it;
        it.iteration = tau;
        it.weights = weights;
        it.selection = empirical_selection_distribution(
            data, map, opts.alpha, weights, opts.permutations, derive_seed(opts.seed, "tune-iteration", static_cast<std::uint64_t>(tau)),
            opts.threads
        );
        it.deviation = it.selection.array() - 1.0 / static_cast<double>(L);
        it.total_deviation = it.deviation.cwiseAbs().sum();
        if (it.total_deviation < best) {
            best = it.total_deviation;
            result.best_iteration = tau;
            result.weights = weights;
        }
        const bool done = it.total_deviation < opts.epsilon;
        result.trace.push_back(it);
        if (done) {
            result.converged = true;
            result.weights = weights;
            result.best_iteration = tau;
            break;
        }
        weights = adjust_weights(weights, it.selection, opts.eta);
    }
    return result;
}

} // namespace pathsgl
