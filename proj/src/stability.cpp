#include <pathsgl/stability.hpp>
#include <pathsgl/parallel.hpp>
#include <pathsgl/penalty.hpp>
#include <pathsgl/random.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pathsgl {

std::vector<Index> subsample_indices(Index n, Index b, std::uint64_t seed)
{
    require(n >= 2, ErrorCode::InvalidArgument, "subsampling needs at least two samples");
    auto rng = make_rng(seed, "subsample", b);
    return sample_without_replacement(n, n / 2, rng);
}

StandardizedData restandardize_rows(const StandardizedData& data, const std::vector<Index>& rows)
{
    StandardizedData out;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = data.X.cols();
    out.X.resize(n, p);
    out.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
        out.X.row(i) = data.X.row(r);
        out.y(i) = data.y(r);
        if (!data.samples.empty()) out.samples.push_back(data.samples[static_cast<std::size_t>(r)]);
    }
    out.feature_ids = data.feature_ids;
    out.y_mean = out.y.mean();
    out.y.array() -= out.y_mean;
    out.column_means = out.X.colwise().mean();
    out.column_norms.resize(p);
    out.constant.assign(static_cast<std::size_t>(p), false);
    for (Eigen::Index j = 0; j < p; ++j) {
        out.X.col(j).array() -= out.column_means(j);
        const double norm = out.X.col(j).norm();
        out.column_norms(j) = norm;
        if (norm < 1e-12) {
            out.X.col(j).setZero();
            out.constant[static_cast<std::size_t>(j)] = true;
        } else {
            out.X.col(j) /= norm;
        }
    }
    return out;
}

namespace {

struct SubsampleOutcome
{
    std::vector<Index> pathways;
    std::vector<Index> features;
    bool converged = true;
};

RankingResult run_ranking(const StandardizedData& data, const PathwayMap& map, const RankingConfig& config, bool permute)
{
    require(config.subsamples >= 1, ErrorCode::InvalidArgument, "B must be at least 1");
    require(config.lambda_fraction > 0.0, ErrorCode::InvalidArgument, "lambda fraction must be positive");
    require(map.n_features() == data.n_features(), ErrorCode::InvalidArgument, "pathway map and data disagree on features");
    SglConfig base;
    base.alpha = config.alpha;
    base.weights = config.weights;
    base.tol = config.tol;
    base.validate(map.n_pathways());

    const ExpandedIndex expanded = expand_overlaps(map);
    const Index B = config.subsamples;
    std::vector<SubsampleOutcome> outcomes(B);
    parallel_for(B, config.threads, [&](std::size_t b) {
        const auto rows = subsample_indices(data.n_samples(), b, config.seed);
        StandardizedData sub = restandardize_rows(data, rows);
        if (permute) {
            auto rng = make_rng(config.seed, "null-permutation", b);
            const auto perm = random_permutation(static_cast<Index>(sub.y.size()), rng);
            Vector y(sub.y.size());
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = sub.y(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
            sub.y = std::move(y);
        }
        SglConfig cfg = base;
        cfg.threads = 1;
        cfg.lambda = config.lambda_fraction * lambda_grid(sub, map, cfg.alpha, cfg.weights, 1).lambda_max;
        auto& out = outcomes[b];
        if (cfg.lambda <= 0.0) return; // response orthogonal to every pathway: nothing can be selected
        const SglFit fit = config.algorithm == Algorithm::Bcgd ? fit_sgl_bcgd(sub, map, expanded, cfg) : fit_sgl_cgd(sub, map, cfg);
        out.pathways = fit.selected_pathways;
        out.features = fit.selected_features;
        out.converged = fit.converged;
    });

    RankingResult res;
    res.subsamples = B;
    res.null = permute;
    res.config = config;
    res.pi_path = Vector::Zero(static_cast<Eigen::Index>(map.n_pathways()));
    res.pi_snp = Vector::Zero(static_cast<Eigen::Index>(map.n_features()));
    res.pi_gene = Vector::Zero(static_cast<Eigen::Index>(map.n_genes()));
    std::vector<char> gene_hit(map.n_genes());
    double sp = 0.0, sp2 = 0.0, sf = 0.0, sf2 = 0.0;
    for (const auto& o : outcomes) {
        for (Index l : o.pathways) res.pi_path(static_cast<Eigen::Index>(l)) += 1.0;
        std::fill(gene_hit.begin(), gene_hit.end(), 0);
        for (Index j : o.features) {
            res.pi_snp(static_cast<Eigen::Index>(j)) += 1.0;
            for (Index g : map.snp_to_genes[j]) gene_hit[g] = 1;
        }
        for (Index g = 0; g < map.n_genes(); ++g)
            if (gene_hit[g]) res.pi_gene(static_cast<Eigen::Index>(g)) += 1.0;
        const auto np = static_cast<double>(o.pathways.size());
        const auto nf = static_cast<double>(o.features.size());
        sp += np;
        sp2 += np * np;
        sf += nf;
        sf2 += nf * nf;
        if (!o.converged) ++res.nonconverged;
    }
    const auto Bd = static_cast<double>(B);
    res.pi_path /= Bd;
    res.pi_snp /= Bd;
    res.pi_gene /= Bd;
    res.mean_pathways = sp / Bd;
    res.mean_features = sf / Bd;
    if (B > 1) {
        res.sd_pathways = std::sqrt(std::max(0.0, (sp2 - Bd * res.mean_pathways * res.mean_pathways) / (Bd - 1.0)));
        res.sd_features = std::sqrt(std::max(0.0, (sf2 - Bd * res.mean_features * res.mean_features) / (Bd - 1.0)));
    }
    return res;
}

} // namespace

RankingResult rank_by_stability(const StandardizedData& data, const PathwayMap& map, const RankingConfig& config)
{
    return run_ranking(data, map, config, false);
}

RankingResult null_ranking(const StandardizedData& data, const PathwayMap& map, const RankingConfig& config)
{
    return run_ranking(data, map, config, true);
}

Correlation pearson(const Vector& a, const Vector& b)
{
    require(a.size() == b.size(), ErrorCode::UniverseMismatch, "vectors differ in length");
    require(a.size() >= 2, ErrorCode::InvalidArgument, "need at least two pairs");
    const Vector ca = a.array() - a.mean();
    const Vector cb = b.array() - b.mean();
    const double sa = ca.norm(), sb = cb.norm();
    require(sa > 0.0 && sb > 0.0, ErrorCode::DegenerateVariance, "constant vector, correlation undefined");
    Correlation c;
    c.n = static_cast<Index>(a.size());
    c.r = std::clamp(ca.dot(cb) / (sa * sb), -1.0, 1.0);
    if (c.n <= 2 || std::abs(c.r) == 1.0) {
        c.p_value = c.n <= 2 ? 1.0 : 0.0;
        return c;
    }
    const double df = static_cast<double>(c.n) - 2.0;
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    boost::math::students_t dist(df);
    c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return c;
}

namespace {

Correlation safe_pearson(const Vector& a, const Vector& b)
{
    try {
        return pearson(a, b);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateVariance) throw;
        Correlation c;
        c.n = static_cast<Index>(a.size());
        c.defined = false;
        c.r = std::numeric_limits<double>::quiet_NaN();
        c.p_value = std::numeric_limits<double>::quiet_NaN();
        return c;
    }
}

} // namespace

BiasReport bias_diagnostics(const RankingResult& empirical, const RankingResult& null)
{
    require(
        empirical.pi_path.size() == null.pi_path.size() && empirical.pi_snp.size() == null.pi_snp.size(),
        ErrorCode::UniverseMismatch, "rankings cover different variables"
    );
    BiasReport report;
    report.pathways = safe_pearson(empirical.pi_path, null.pi_path);
    std::vector<double> a, b;
    for (Eigen::Index j = 0; j < empirical.pi_snp.size(); ++j) {
        if (empirical.pi_snp(j) > 0.0) {
            a.push_back(empirical.pi_snp(j));
            b.push_back(null.pi_snp(j));
        }
    }
    if (a.size() < 2) {
        report.features.n = a.size();
        report.features.defined = false;
        report.features.r = report.features.p_value = std::numeric_limits<double>::quiet_NaN();
    } else {
        report.features = safe_pearson(
            Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size())),
            Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()))
        );
    }
    return report;
}

std::vector<RankedItem> ranked_items(const RankingResult& result, const PathwayMap& map, RankLevel level)
{
    std::vector<RankedItem> items;
    const Vector* freq = nullptr;
    switch (level) {
    case RankLevel::Pathway: freq = &result.pi_path; break;
    case RankLevel::Feature: freq = &result.pi_snp; break;
    case RankLevel::Gene: freq = &result.pi_gene; break;
    }
    for (Eigen::Index i = 0; i < freq->size(); ++i) {
        const double f = (*freq)(i);
        const auto u = static_cast<std::size_t>(i);
        if (level != RankLevel::Pathway && f <= 0.0) continue;
        RankedItem item;
        item.frequency = f;
        if (level == RankLevel::Pathway) {
            item.id = map.pathways[u].id;
        } else if (level == RankLevel::Gene) {
            item.id = map.gene_ids[u];
        } else {
            item.id = map.feature_ids[u];
            for (Index g : map.snp_to_genes[u]) item.genes.push_back(map.gene_ids[g]);
        }
        items.push_back(std::move(item));
    }
    std::sort(items.begin(), items.end(), [](const RankedItem& x, const RankedItem& y) {
        if (x.frequency != y.frequency) return x.frequency > y.frequency;
        return x.id < y.id;
    });
    for (std::size_t i = 0; i < items.size(); ++i) {
        if ((i > 0 && items[i - 1].frequency == items[i].frequency) ||
            (i + 1 < items.size() && items[i + 1].frequency == items[i].frequency))
            items[i].tied = true;
    }
    return items;
}

void write_ranking_tsv(const std::filesystem::path& path, const std::vector<RankedItem>& items, bool with_genes)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
    out << "rank\tid\tfrequency\ttied";
    if (with_genes) out << "\tgenes";
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6g", items[i].frequency);
        out << (i + 1) << '\t' << items[i].id << '\t' << buf << '\t' << (items[i].tied ? 1 : 0);
        if (with_genes) {
            out << '\t';
            for (std::size_t g = 0; g < items[i].genes.size(); ++g) out << (g ? "," : "") << items[i].genes[g];
            if (items[i].genes.empty()) out << '.';
        }
        out << '\n';
    }
}

} // namespace pathsgl
