#include <pathsgl/penalty.hpp>
#include <pathsgl/parallel.hpp>

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <limits>

namespace pathsgl {

double lambda_star(const Vector& correlations, double alpha)
{
    require(alpha > 0.0, ErrorCode::AlphaZero, "lambda* is unbounded when alpha == 0");
    return correlations.size() == 0 ? 0.0 : correlations.cwiseAbs().maxCoeff() / alpha;
}

double lambda_star(const Matrix& X_l, const Vector& y, double alpha)
{
    return lambda_star(Vector(X_l.transpose() * y), alpha);
}

double lambda_min_from_correlations(const Vector& z, double alpha, double weight, const RootOptions& opts)
{
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
    require(weight > 0.0, ErrorCode::InvalidArgument, "pathway weight must be positive");
    if (z.size() == 0) return 0.0;
    const double zmax = z.cwiseAbs().maxCoeff();
    if (zmax == 0.0) return 0.0;
    if (alpha == 0.0) return z.norm() / weight;
    if (alpha == 1.0) return zmax;

    const double upper = zmax / alpha;
    const double gw = (1.0 - alpha) * weight;
    auto gap = [&](double lambda) {
        const double t = alpha * lambda;
        double ss = 0.0;
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            const double s = soft_threshold(z(k), t);
            ss += s * s;
        }
        return ss - gw * gw * lambda * lambda;
    };
    const double f_lo = gap(0.0);
    const double f_hi = gap(upper);
    if (f_hi >= 0.0) return upper; // not reachable for w > 0; kept for floating-point safety
    std::uintmax_t iters = static_cast<std::uintmax_t>(opts.max_iters);
    const double tol = opts.abs_tol;
    const auto bracket = boost::math::tools::toms748_solve(
        gap, 0.0, upper, f_lo, f_hi, [tol](double a, double b) { return std::abs(b - a) <= tol; }, iters
    );
    return 0.5 * (bracket.first + bracket.second);
}

double lambda_min_for_pathway(const Matrix& X_l, const Vector& y, double alpha, double weight, const RootOptions& opts)
{
    return lambda_min_from_correlations(X_l.transpose() * y, alpha, weight, opts);
}

LambdaGrid lambda_grid(
    const Matrix& X, const Vector& y, const PathwayMap& map, double alpha,
    const std::vector<double>& weights, unsigned threads, const RootOptions& opts
)
{
    const Index L = map.n_pathways();
    require(weights.empty() || weights.size() == L, ErrorCode::InvalidArgument, "weights length must equal pathway count");
    const Vector xty = X.transpose() * y;
    LambdaGrid grid;
    grid.lambda_star.assign(L, std::numeric_limits<double>::infinity());
    grid.lambda_min.assign(L, 0.0);
    parallel_for(L, threads, [&](std::size_t l) {
        const auto& members = map.pathways[l].members;
        Vector z(static_cast<Eigen::Index>(members.size()));
        for (std::size_t k = 0; k < members.size(); ++k) z(static_cast<Eigen::Index>(k)) = xty(static_cast<Eigen::Index>(members[k]));
        if (alpha > 0.0) grid.lambda_star[l] = lambda_star(z, alpha);
        grid.lambda_min[l] = lambda_min_from_correlations(z, alpha, weights.empty() ? 1.0 : weights[l], opts);
    });
    for (Index l = 0; l < L; ++l) {
        if (l == 0 || grid.lambda_min[l] > grid.lambda_max) {
            grid.lambda_max = grid.lambda_min[l];
            grid.argmax = l;
        }
    }
    return grid;
}

LambdaGrid lambda_grid(
    const StandardizedData& data, const PathwayMap& map, double alpha, const std::vector<double>& weights, unsigned threads
)
{
    return lambda_grid(data.X, data.y, map, alpha, weights, threads);
}

double lambda_max(const StandardizedData& data, const PathwayMap& map, double alpha, const std::vector<double>& weights)
{
    return lambda_grid(data, map, alpha, weights).lambda_max;
}

double lasso_lambda_max(const Matrix& X, const Vector& y)
{
    if (X.cols() == 0) return 0.0;
    return (X.transpose() * y).cwiseAbs().maxCoeff();
}

CardinalityMatch match_lasso_cardinality(const Matrix& X, const Vector& y, Index target, const CardinalityOptions& opts)
{
    require(target <= static_cast<Index>(X.cols()), ErrorCode::InvalidArgument, "target cardinality exceeds feature count");
    require(opts.grid_steps >= 2 && opts.min_fraction > 0.0 && opts.min_fraction < 1.0, ErrorCode::InvalidArgument, "bad grid");
    const double top = lasso_lambda_max(X, y);
    CardinalityMatch out;
    out.lambda = top;
    out.beta = Vector::Zero(X.cols());
    out.count = 0;
    if (target == 0 || top == 0.0) {
        out.exact = (target == 0);
        return out;
    }

    const double ratio = std::pow(opts.min_fraction, 1.0 / (opts.grid_steps - 1));
    Vector warm = Vector::Zero(X.cols());
    double prev_lambda = top;
    Vector prev_beta = warm;
    Index prev_count = 0;
    Index max_seen = 0;
    for (int i = 0; i < opts.grid_steps; ++i) {
        const double lambda = top * std::pow(ratio, i);
        auto fit = fit_lasso(X, y, lambda, opts.lasso, &warm);
        const Index count = fit.nonzero_count();
        if (count < max_seen) out.nonmonotone = true;
        max_seen = std::max(max_seen, count);
        warm = fit.beta;
        out.grid_index = i;
        if (count == target) {
            out.lambda = lambda;
            out.beta = std::move(fit.beta);
            out.count = count;
            out.exact = true;
            return out;
        }
        if (count > target) {
            // Bisect (prev_lambda, lambda) for an exact hit.
            double hi = prev_lambda, lo = lambda;
            Vector best_beta = fit.beta;
            double best_lambda = lambda;
            Index best_count = count;
            Vector hi_beta = prev_beta;
            for (int r = 0; r < opts.refine_steps; ++r) {
                const double mid = std::sqrt(hi * lo);
                auto mfit = fit_lasso(X, y, mid, opts.lasso, &hi_beta);
                const Index mc = mfit.nonzero_count();
                out.refined = true;
                if (mc == target) {
                    out.lambda = mid;
                    out.beta = std::move(mfit.beta);
                    out.count = mc;
                    out.exact = true;
                    return out;
                }
                if (mc > target) {
                    lo = mid;
                    if (mc < best_count || (mc == best_count && mid > best_lambda)) {
                        best_count = mc;
                        best_lambda = mid;
                        best_beta = mfit.beta;
                    }
                } else {
                    hi = mid;
                    hi_beta = mfit.beta;
                }
            }
            out.lambda = best_lambda;
            out.beta = std::move(best_beta);
            out.count = best_count;
            out.exact = false;
            return out;
        }
        prev_lambda = lambda;
        prev_beta = warm;
        prev_count = count;
    }
    // Grid exhausted below target: report the densest solution found.
    out.lambda = prev_lambda;
    out.beta = prev_beta;
    out.count = prev_count;
    out.exact = false;
    return out;
}

CardinalityMatch match_lasso_cardinality(const StandardizedData& data, Index target, const CardinalityOptions& opts)
{
    return match_lasso_cardinality(data.X, data.y, target, opts);
}

} // namespace pathsgl
