#include <pathsgl/sgl_solver.hpp>
#include <pathsgl/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pathsgl {

const char* to_string(Algorithm algorithm)
{
    return algorithm == Algorithm::Bcgd ? "BCGD" : "CGD";
}

Algorithm parse_algorithm(std::string_view name)
{
    if (name == "bcgd" || name == "BCGD") return Algorithm::Bcgd;
    if (name == "cgd" || name == "CGD") return Algorithm::Cgd;
    throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + std::string(name) + "'");
}

void SglConfig::validate(Index n_pathways) const
{
    require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
    require(
        weights.empty() || weights.size() == n_pathways, ErrorCode::InvalidArgument,
        "expected " + std::to_string(n_pathways) + " pathway weights, got " + std::to_string(weights.size())
    );
    for (double w : weights)
        require(w > 0.0 && std::isfinite(w), ErrorCode::InvalidArgument, "pathway weights must be positive");
    require(tol > 0.0 && outer_tol > 0.0, ErrorCode::InvalidArgument, "tolerances must be positive");
    require(max_inner_iters > 0 && max_outer_iters > 0 && max_halvings >= 0, ErrorCode::InvalidArgument, "bad iteration caps");
}

Vector soft_threshold(const Vector& z, double t)
{
    return z.unaryExpr([t](double v) { return soft_threshold(v, t); });
}

namespace {

Vector block_correlations(const Matrix& X, std::span<const Index> cols, const Vector& r)
{
    Vector z(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
        z(static_cast<Eigen::Index>(k)) = X.col(static_cast<Eigen::Index>(cols[k])).dot(r);
    return z;
}

double soft_threshold_norm(const Vector& z, double t)
{
    double ss = 0.0;
    for (Eigen::Index k = 0; k < z.size(); ++k) {
        const double s = soft_threshold(z(k), t);
        ss += s * s;
    }
    return std::sqrt(ss);
}

std::vector<Index> iota_cols(Eigen::Index n)
{
    std::vector<Index> cols(static_cast<std::size_t>(n));
    std::iota(cols.begin(), cols.end(), Index{0});
    return cols;
}

void add_block(const Matrix& X, std::span<const Index> cols, const Vector& beta, double scale, Vector& out)
{
    for (std::size_t k = 0; k < cols.size(); ++k) {
        const double b = beta(static_cast<Eigen::Index>(k));
        if (b != 0.0) out.noalias() += (scale * b) * X.col(static_cast<Eigen::Index>(cols[k]));
    }
}

} // namespace

double pathway_selection_stat(const Matrix& X, std::span<const Index> cols, const Vector& r, double alpha, double lambda)
{
    return soft_threshold_norm(block_correlations(X, cols, r), alpha * lambda);
}

double pathway_selection_stat(const Matrix& X_l, const Vector& r, double alpha, double lambda)
{
    return soft_threshold_norm(X_l.transpose() * r, alpha * lambda);
}

double pathway_objective(
    const Matrix& X, std::span<const Index> cols, const Vector& target, const Vector& beta,
    double alpha, double lambda, double weight
)
{
    Vector e = target;
    add_block(X, cols, beta, -1.0, e);
    return 0.5 * e.squaredNorm() + (1.0 - alpha) * lambda * weight * beta.norm() + alpha * lambda * beta.lpNorm<1>();
}

BlockFit solve_block(
    const Matrix& X, std::span<const Index> cols, const Vector& target,
    double alpha, double lambda, double weight, Vector start, const InnerOptions& opts
)
{
    const auto m = static_cast<Eigen::Index>(cols.size());
    require(start.size() == m, ErrorCode::InvalidArgument, "warm start has wrong length");
    const double l1 = alpha * lambda;
    const double gl = (1.0 - alpha) * lambda * weight;

    BlockFit out;
    out.gate_open = true;
    Vector& beta = out.beta;
    beta = std::move(start);

    Vector e = target;
    add_block(X, cols, beta, -1.0, e);
    Vector colsq(m);
    for (Eigen::Index k = 0; k < m; ++k) colsq(k) = X.col(static_cast<Eigen::Index>(cols[k])).squaredNorm();

    double norm2 = beta.squaredNorm();
    auto current_objective = [&] { return 0.5 * e.squaredNorm() + gl * std::sqrt(norm2) + l1 * beta.lpNorm<1>(); };

    // Seed a zero block along the soft-thresholded gradient with an exact line search.
    auto seed = [&]() -> bool {
        const Vector d = soft_threshold(block_correlations(X, cols, e), l1);
        const double dn = d.norm();
        if (!(dn > gl)) return false;
        Vector xd = Vector::Zero(e.size());
        add_block(X, cols, d, 1.0, xd);
        const double curvature = xd.squaredNorm();
        if (!(curvature > 0.0)) return false;
        const double t = (xd.dot(e) - gl * dn - l1 * d.lpNorm<1>()) / curvature;
        if (!(t > 0.0)) return false;
        beta = t * d;
        e.noalias() -= t * xd;
        norm2 = beta.squaredNorm();
        return norm2 > 0.0;
    };

    out.converged = false;
    bool seeded = false;
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        out.iterations = iter;
        if (norm2 == 0.0) {
            // A seeded block that returns to zero sits on the gate boundary up to rounding.
            if (seeded || !seed()) {
                beta.setZero();
                out.gate_open = false;
                out.converged = true;
                if (opts.record_trace) out.objective_trace.push_back(current_objective());
                return out;
            }
            seeded = true;
            if (opts.record_trace) out.objective_trace.push_back(current_objective());
        }

        double max_delta = 0.0;
        for (Eigen::Index k = 0; k < m; ++k) {
            const double cj = colsq(k);
            if (cj == 0.0) continue;
            const auto col = X.col(static_cast<Eigen::Index>(cols[static_cast<std::size_t>(k)]));
            const double g = -col.dot(e);
            const double bj = beta(k);
            const double nrm = std::sqrt(norm2);
            if (nrm == 0.0) break;

            double cand;
            if (bj != 0.0) {
                const double grad = g + gl * bj / nrm + l1 * (bj > 0.0 ? 1.0 : -1.0);
                const double curv = cj + gl / nrm * (1.0 - bj * bj / norm2);
                cand = bj - grad / curv;
                if (l1 > 0.0 && cand * bj < 0.0) cand = 0.0;
            } else {
                const double up = g + l1;
                const double down = g - l1;
                double grad;
                if (down > 0.0) grad = down;
                else if (up < 0.0) grad = up;
                else continue;
                cand = -grad / (cj + gl / nrm);
            }

            const double rest = std::max(0.0, norm2 - bj * bj);
            auto change = [&](double b) {
                const double dl = b - bj;
                const double new_norm = std::sqrt(rest + b * b);
                const double group = (b * b - bj * bj) / (new_norm + nrm);
                return dl * g + 0.5 * dl * dl * cj + gl * group + l1 * (std::abs(b) - std::abs(bj));
            };
            double df = change(cand);
            for (int h = 0; df > 0.0 && h < opts.max_halvings; ++h) {
                cand = 0.5 * (cand + bj);
                df = change(cand);
            }
            if (df > 0.0) continue;
            const double delta = cand - bj;
            if (delta == 0.0) continue;
            e.noalias() -= delta * col;
            beta(k) = cand;
            norm2 = rest + cand * cand;
            max_delta = std::max(max_delta, std::abs(delta));
        }
        norm2 = beta.squaredNorm();
        if (opts.record_trace) out.objective_trace.push_back(current_objective());
        if (max_delta < opts.tol && norm2 > 0.0) {
            out.converged = true;
            break;
        }
    }
    return out;
}

BlockFit fit_pathway_cgd(
    const Matrix& X, std::span<const Index> cols, const Vector& y,
    double alpha, double lambda, double weight, const InnerOptions& opts
)
{
    const auto m = static_cast<Eigen::Index>(cols.size());
    const double stat = pathway_selection_stat(X, cols, y, alpha, lambda);
    if (!(stat > (1.0 - alpha) * lambda * weight)) {
        BlockFit out;
        out.beta = Vector::Zero(m);
        out.gate_open = false;
        if (opts.record_trace) out.objective_trace.push_back(0.5 * y.squaredNorm());
        return out;
    }
    return solve_block(X, cols, y, alpha, lambda, weight, Vector::Zero(m), opts);
}

BlockFit fit_pathway_cgd(const Matrix& X_l, const Vector& y, double alpha, double lambda, double weight, const InnerOptions& opts)
{
    const auto cols = iota_cols(X_l.cols());
    return fit_pathway_cgd(X_l, cols, y, alpha, lambda, weight, opts);
}

namespace {

InnerOptions inner_options(const SglConfig& config)
{
    return InnerOptions{config.tol, config.max_inner_iters, config.max_halvings, false};
}

void assemble(SglFit& fit, const PathwayMap& map, const std::vector<Vector>& betas)
{
    const Index L = map.n_pathways();
    fit.coefficients.assign(L, {});
    std::set<Index> selected;
    for (Index l = 0; l < L; ++l) {
        const auto& members = map.pathways[l].members;
        auto& pc = fit.coefficients[l];
        for (std::size_t k = 0; k < members.size(); ++k) {
            const double b = betas[l](static_cast<Eigen::Index>(k));
            if (b != 0.0) {
                pc.features.push_back(members[k]);
                pc.values.push_back(b);
            }
        }
        if (!pc.features.empty()) {
            fit.selected_pathways.push_back(l);
            selected.insert(pc.features.begin(), pc.features.end());
        }
    }
    fit.selected_features.assign(selected.begin(), selected.end());
}

} // namespace

SglFit fit_sgl_cgd(const StandardizedData& data, const PathwayMap& map, const SglConfig& config)
{
    config.validate(map.n_pathways());
    const Index L = map.n_pathways();
    const auto opts = inner_options(config);

    std::vector<BlockFit> blocks(L);
    parallel_for(L, config.threads, [&](std::size_t l) {
        blocks[l] = fit_pathway_cgd(data.X, map.pathways[l].members, data.y, config.alpha, config.lambda, config.weight(l), opts);
    });

    SglFit fit;
    fit.algorithm = Algorithm::Cgd;
    fit.lambda = config.lambda;
    fit.alpha = config.alpha;
    std::vector<Vector> betas(L);
    fit.inner_iterations.resize(L);
    for (Index l = 0; l < L; ++l) {
        betas[l] = std::move(blocks[l].beta);
        fit.inner_iterations[l] = blocks[l].iterations;
        fit.iterations = std::max(fit.iterations, blocks[l].iterations);
        if (!blocks[l].converged) {
            fit.converged = false;
            fit.nonconverged_pathways.push_back(l);
        }
    }
    assemble(fit, map, betas);
    fit.objective = objective(data, fit, config);
    return fit;
}

SglFit fit_sgl_bcgd(const StandardizedData& data, const PathwayMap& map, const ExpandedIndex& expanded, const SglConfig& config)
{
    config.validate(map.n_pathways());
    const Index L = map.n_pathways();
    require(expanded.n_pathways() == L, ErrorCode::InvalidArgument, "expanded index does not match pathway map");
    const auto opts = inner_options(config);

    std::vector<Vector> betas(L);
    for (Index l = 0; l < L; ++l) betas[l] = Vector::Zero(static_cast<Eigen::Index>(map.pathways[l].members.size()));

    SglFit fit;
    fit.algorithm = Algorithm::Bcgd;
    fit.lambda = config.lambda;
    fit.alpha = config.alpha;
    fit.inner_iterations.assign(L, 0);
    std::vector<bool> inner_failed(L, false);

    Vector e = data.y; // y - X* beta*
    fit.converged = false;
    for (int outer = 1; outer <= config.max_outer_iters; ++outer) {
        fit.iterations = outer;
        double max_change = 0.0;
        for (Index l = 0; l < L; ++l) {
            const std::span<const Index> cols(
                expanded.back_map.data() + expanded.offsets[l], expanded.offsets[l + 1] - expanded.offsets[l]
            );
            Vector& beta = betas[l];
            const bool was_zero = (beta.array() == 0.0).all();
            if (!was_zero) add_block(data.X, cols, beta, 1.0, e); // e is now the block partial residual

            const double gl = (1.0 - config.alpha) * config.lambda * config.weight(l);
            Vector next;
            if (!(pathway_selection_stat(data.X, cols, e, config.alpha, config.lambda) > gl)) {
                next = Vector::Zero(beta.size());
            } else {
                auto block = solve_block(data.X, cols, e, config.alpha, config.lambda, config.weight(l), beta, opts);
                fit.inner_iterations[l] += block.iterations;
                if (!block.converged) inner_failed[l] = true;
                next = std::move(block.beta);
            }
            if (beta.size() > 0) max_change = std::max(max_change, (next - beta).cwiseAbs().maxCoeff());
            beta = std::move(next);
            add_block(data.X, cols, beta, -1.0, e);
        }
        fit.outer_change_trace.push_back(max_change);
        if (max_change < config.outer_tol) {
            fit.converged = true;
            break;
        }
    }
    for (Index l = 0; l < L; ++l) {
        if (inner_failed[l]) {
            fit.converged = false;
            fit.nonconverged_pathways.push_back(l);
        }
    }
    assemble(fit, map, betas);
    fit.objective = objective(data, fit, config);
    return fit;
}

SglFit fit_sgl(const StandardizedData& data, const PathwayMap& map, const SglConfig& config, Algorithm algorithm)
{
    if (algorithm == Algorithm::Cgd) return fit_sgl_cgd(data, map, config);
    return fit_sgl_bcgd(data, map, expand_overlaps(map), config);
}

double objective(const StandardizedData& data, const SglFit& fit, const SglConfig& config)
{
    const double l1 = config.alpha * config.lambda;
    const double base = 0.5 * data.y.squaredNorm();
    if (fit.algorithm == Algorithm::Bcgd) {
        Vector e = data.y;
        double penalty = 0.0;
        for (Index l = 0; l < fit.coefficients.size(); ++l) {
            const auto& pc = fit.coefficients[l];
            double ss = 0.0;
            for (std::size_t k = 0; k < pc.features.size(); ++k) {
                e.noalias() -= pc.values[k] * data.X.col(static_cast<Eigen::Index>(pc.features[k]));
                ss += pc.values[k] * pc.values[k];
                penalty += l1 * std::abs(pc.values[k]);
            }
            penalty += (1.0 - config.alpha) * config.lambda * config.weight(l) * std::sqrt(ss);
        }
        return 0.5 * e.squaredNorm() + penalty;
    }
    double total = base;
    for (Index l = 0; l < fit.coefficients.size(); ++l) {
        const auto& pc = fit.coefficients[l];
        if (pc.features.empty()) continue;
        const Vector beta = Eigen::Map<const Vector>(pc.values.data(), static_cast<Eigen::Index>(pc.values.size()));
        total += pathway_objective(data.X, pc.features, data.y, beta, config.alpha, config.lambda, config.weight(l)) - base;
    }
    return total;
}

Index LassoFit::nonzero_count() const
{
    return static_cast<Index>((beta.array() != 0.0).count());
}

LassoFit fit_lasso(const Matrix& X, const Vector& y, double lambda, const LassoOptions& opts, const Vector* warm_start)
{
    require(lambda >= 0.0, ErrorCode::InvalidArgument, "lambda must be >= 0");
    require(X.rows() == y.size(), ErrorCode::InvalidArgument, "design and response sizes differ");
    const Eigen::Index p = X.cols();
    LassoFit out;
    out.beta = warm_start ? *warm_start : Vector::Zero(p);
    require(out.beta.size() == p, ErrorCode::InvalidArgument, "warm start has wrong length");
    Vector& beta = out.beta;
    Vector e = y - X * beta;
    const Vector colsq = X.colwise().squaredNorm().transpose();

    auto update = [&](Eigen::Index j) {
        const double c = colsq(j);
        if (c == 0.0) return 0.0;
        const double old = beta(j);
        const double z = X.col(j).dot(e) + c * old;
        const double next = soft_threshold(z, lambda) / c;
        const double delta = next - old;
        if (delta != 0.0) {
            e.noalias() -= delta * X.col(j);
            beta(j) = next;
        }
        return std::abs(delta);
    };

    out.converged = false;
    std::vector<Eigen::Index> active;
    while (out.iterations < opts.max_iters) {
        ++out.iterations;
        double max_delta = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) max_delta = std::max(max_delta, update(j));
        if (max_delta < opts.tol) {
            out.converged = true;
            break;
        }
        active.clear();
        for (Eigen::Index j = 0; j < p; ++j)
            if (beta(j) != 0.0) active.push_back(j);
        while (out.iterations < opts.max_iters) {
            ++out.iterations;
            double inner = 0.0;
            for (auto j : active) inner = std::max(inner, update(j));
            if (inner < opts.tol) break;
        }
    }
    return out;
}

LassoFit fit_lasso(const StandardizedData& data, double lambda, const LassoOptions& opts)
{
    return fit_lasso(data.X, data.y, lambda, opts);
}

double lasso_objective(const Matrix& X, const Vector& y, const Vector& beta, double lambda)
{
    return 0.5 * (y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

} // namespace pathsgl
