#include <pathsgl/simulation.hpp>
#include <pathsgl/parallel.hpp>
#include <pathsgl/penalty.hpp>
#include <pathsgl/random.hpp>
#include <pathsgl/sgl_solver.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

namespace pathsgl {

SimulatedGenotypes simulate_genotypes(Index n, Index p, double maf_low, double maf_high, std::uint64_t seed)
{
    require(n >= 1 && p >= 1, ErrorCode::InvalidArgument, "need at least one sample and one feature");
    require(0.0 < maf_low && maf_low <= maf_high && maf_high <= 0.5, ErrorCode::InvalidArgument, "need 0 < maf_low <= maf_high <= 0.5");
    SimulatedGenotypes sim;
    auto& g = sim.genotype;
    g.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    sim.maf.resize(static_cast<Eigen::Index>(p));
    for (Index i = 0; i < n; ++i) g.samples.push_back("s" + std::to_string(i + 1));
    for (Index j = 0; j < p; ++j) g.snp_ids.push_back("snp" + std::to_string(j + 1));
    for (Index j = 0; j < p; ++j) {
        auto rng = make_rng(seed, "genotype", j);
        std::uniform_real_distribution<double> maf_dist(maf_low, maf_high);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const double m = maf_low == maf_high ? maf_low : maf_dist(rng);
        const double p0 = (1.0 - m) * (1.0 - m);
        const double p01 = p0 + 2.0 * m * (1.0 - m);
        sim.maf(static_cast<Eigen::Index>(j)) = m;
        for (Index i = 0; i < n; ++i) {
            const double u = u01(rng);
            g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u < p0 ? 0.0 : (u < p01 ? 1.0 : 2.0);
        }
    }
    return sim;
}

namespace {

// Genes are runs of `gene_size` features over 0..p-1; pathway l holds the genes covering `ranges[l]`.
PathwayMap build_from_ranges(Index p, const std::vector<std::pair<Index, Index>>& ranges, Index gene_size)
{
    std::vector<std::string> feature_ids;
    for (Index j = 0; j < p; ++j) feature_ids.push_back("snp" + std::to_string(j + 1));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (Index j = 0; j < p; ++j) pairs.emplace_back(feature_ids[j], "gene" + std::to_string(j / gene_size + 1));
    std::vector<std::pair<std::string, std::vector<std::string>>> pathways;
    for (std::size_t l = 0; l < ranges.size(); ++l) {
        std::vector<std::string> genes;
        for (Index g = ranges[l].first / gene_size; g * gene_size < ranges[l].second; ++g) genes.push_back("gene" + std::to_string(g + 1));
        pathways.emplace_back("pathway" + std::to_string(l + 1), std::move(genes));
    }
    return build_pathway_map(pathways, pairs, feature_ids);
}

} // namespace

PathwayMap build_study1_pathways(Index p, Index n_pathways, Index gene_size)
{
    require(n_pathways >= 1 && p >= n_pathways && p % n_pathways == 0, ErrorCode::InvalidTopology, "P must be a positive multiple of L");
    const Index size = p / n_pathways;
    require(gene_size >= 1 && size % gene_size == 0, ErrorCode::InvalidTopology, "pathway size must be a multiple of the gene size");
    std::vector<std::pair<Index, Index>> ranges;
    for (Index l = 0; l < n_pathways; ++l) ranges.emplace_back(l * size, (l + 1) * size);
    return build_from_ranges(p, ranges, gene_size);
}

PathwayMap build_study2_pathways(Index n_pathways, Index size, Index overlap, Index gene_size)
{
    require(n_pathways >= 1 && size >= 1 && overlap < size, ErrorCode::InvalidTopology, "need L >= 1 and overlap < size");
    require(2 * overlap <= size, ErrorCode::InvalidTopology, "overlaps of non-adjacent pathways are not supported");
    const Index stride = size - overlap;
    require(gene_size >= 1 && stride % gene_size == 0 && overlap % gene_size == 0, ErrorCode::InvalidTopology,
            "stride and overlap must be multiples of the gene size");
    const Index p = n_pathways * stride + overlap;
    std::vector<std::pair<Index, Index>> ranges;
    for (Index l = 0; l < n_pathways; ++l) ranges.emplace_back(l * stride, l * stride + size);
    return build_from_ranges(p, ranges, gene_size);
}

namespace {

std::vector<Index> pathways_touching(const PathwayMap& map, const std::vector<Index>& features)
{
    std::set<Index> hit;
    for (Index l = 0; l < map.n_pathways(); ++l) {
        const auto& m = map.pathways[l].members;
        for (Index j : features)
            if (std::binary_search(m.begin(), m.end(), j)) {
                hit.insert(l);
                break;
            }
    }
    return {hit.begin(), hit.end()};
}

std::vector<Index> pick(const std::vector<Index>& pool, Index k, Rng& rng)
{
    require(k <= pool.size(), ErrorCode::InvalidArgument, "not enough candidates for the causal set");
    std::vector<Index> out;
    for (Index i : sample_without_replacement(pool.size(), k, rng)) out.push_back(pool[i]);
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

CausalSet choose_causal_study1(const PathwayMap& map, Index n_causal, bool enriched, std::uint64_t seed)
{
    require(map.n_pathways() >= 1, ErrorCode::InvalidArgument, "no pathways");
    auto rng = make_rng(seed, "causal");
    CausalSet c;
    if (enriched) {
        c.anchor = static_cast<Index>(rng() % map.n_pathways());
        c.features = pick(map.pathways[c.anchor].members, n_causal, rng);
    } else {
        std::vector<Index> all(map.n_features());
        for (Index j = 0; j < all.size(); ++j) all[j] = j;
        c.features = pick(all, n_causal, rng);
    }
    c.pathways = pathways_touching(map, c.features);
    return c;
}

std::vector<Index> study2_eligible_pool(const PathwayMap& map, Index l)
{
    require(l + 1 < map.n_pathways(), ErrorCode::OutOfRange, "adjacent pair index out of range");
    auto minus = [&](Index a, long b) {
        std::vector<Index> out;
        const auto& ga = map.pathways[a].members;
        if (b < 0 || static_cast<Index>(b) >= map.n_pathways()) return ga;
        const auto& gb = map.pathways[static_cast<Index>(b)].members;
        std::set_difference(ga.begin(), ga.end(), gb.begin(), gb.end(), std::back_inserter(out));
        return out;
    };
    const auto left = minus(l, static_cast<long>(l) - 1);
    const auto right = minus(l + 1, static_cast<long>(l) + 2);
    std::vector<Index> pool;
    std::set_union(left.begin(), left.end(), right.begin(), right.end(), std::back_inserter(pool));
    return pool;
}

CausalSet choose_causal_study2(const PathwayMap& map, Index n_causal, std::uint64_t seed)
{
    require(map.n_pathways() >= 2, ErrorCode::InvalidTopology, "need at least two pathways");
    auto rng = make_rng(seed, "causal");
    CausalSet c;
    c.anchor = static_cast<Index>(rng() % (map.n_pathways() - 1));
    c.features = pick(study2_eligible_pool(map, c.anchor), n_causal, rng);
    c.pathways = pathways_touching(map, c.features);
    return c;
}

Effect inject_effects(const Vector& y_base, const Matrix& counts, const std::vector<Index>& causal, double gamma, const Vector& maf, double expected_y)
{
    require(gamma >= 0.0, ErrorCode::InvalidArgument, "gamma must be nonnegative");
    require(counts.rows() == y_base.size(), ErrorCode::InvalidArgument, "counts and response differ in rows");
    Effect e;
    e.y = y_base;
    if (causal.empty() || gamma == 0.0) return e;
    double maf_sum = 0.0;
    for (Index j : causal) maf_sum += maf(static_cast<Eigen::Index>(j));
    require(maf_sum > 0.0, ErrorCode::ZeroMafSum, "causal features have zero total MAF");
    const auto s = static_cast<double>(causal.size());
    e.delta = s * gamma * expected_y / (2.0 * maf_sum);
    for (Index j : causal) e.y += (e.delta / s) * counts.col(static_cast<Eigen::Index>(j));
    return e;
}

namespace {

void rate(const std::vector<Index>& sel, const std::vector<Index>& truth, double& power, double& fpr)
{
    require(!truth.empty(), ErrorCode::EmptyTruth, "truth set is empty");
    std::vector<Index> a = sel, b = truth;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<Index> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    power = static_cast<double>(both.size()) / static_cast<double>(b.size());
    fpr = a.empty() ? 0.0 : static_cast<double>(a.size() - both.size()) / static_cast<double>(a.size());
}

} // namespace

SelectionMetrics power_fpr(
    const std::vector<Index>& selected_pathways, const std::vector<Index>& true_pathways,
    const std::vector<Index>& selected_features, const std::vector<Index>& true_features
)
{
    SelectionMetrics m;
    rate(selected_pathways, true_pathways, m.pathway_power, m.pathway_fpr);
    rate(selected_features, true_features, m.feature_power, m.feature_fpr);
    return m;
}

StudyConfig StudyConfig::defaults(int study)
{
    StudyConfig c;
    c.study = study;
    if (study == 2) {
        c.n_causal = 10;
        c.alpha = 0.85;
        c.gammas = {0.08, 0.12};
        c.replicates = 200;
        c.p = c.n_pathways * (c.pathway_size - c.overlap) + c.overlap;
    }
    return c;
}

void StudyConfig::validate() const
{
    require(study == 1 || study == 2, ErrorCode::InvalidArgument, "study must be 1 or 2");
    require(n >= 2, ErrorCode::InvalidArgument, "need at least two samples");
    require(replicates >= 1, ErrorCode::InvalidArgument, "need at least one replicate");
    require(!gammas.empty(), ErrorCode::InvalidArgument, "effect grid is empty");
    for (double g : gammas) require(g >= 0.0, ErrorCode::InvalidArgument, "effect sizes must be nonnegative");
    require(lambda_fraction > 0.0, ErrorCode::InvalidArgument, "lambda fraction must be positive");
    require(alpha >= 0.0 && alpha <= 1.0, ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
    require(n_causal >= 1, ErrorCode::InvalidArgument, "need at least one causal feature");
    require(y_sd >= 0.0, ErrorCode::InvalidArgument, "y_sd must be nonnegative");
}

const MethodSummary& StudyReport::summary(double gamma, const std::string& method) const
{
    for (const auto& s : summaries)
        if (s.gamma == gamma && s.method == method) return s;
    throw Error(ErrorCode::InvalidArgument, "no summary for method " + method);
}

namespace {

PathwayMap study_map(const StudyConfig& c)
{
    return c.study == 1 ? build_study1_pathways(c.p, c.n_pathways, c.gene_size)
                        : build_study2_pathways(c.n_pathways, c.pathway_size, c.overlap, c.gene_size);
}

struct ReplicateBase
{
    SimulatedGenotypes genotypes;
    CausalSet causal;
    Vector y_base;
};

// Genotypes, causal set and baseline response depend on the replicate only,
// so every effect size sees the same draws.
ReplicateBase make_base(const StudyConfig& c, const PathwayMap& map, Index replicate)
{
    const std::uint64_t rs = derive_seed(c.seed, "replicate", replicate);
    ReplicateBase base;
    base.genotypes = simulate_genotypes(c.n, map.n_features(), c.maf_low, c.maf_high, derive_seed(rs, "genotypes"));
    base.causal = c.study == 1 ? choose_causal_study1(map, c.n_causal, c.enriched, derive_seed(rs, "causal"))
                               : choose_causal_study2(map, c.n_causal, derive_seed(rs, "causal"));
    auto rng = make_rng(rs, "baseline");
    std::normal_distribution<double> noise(c.y_mean, c.y_sd);
    base.y_base.resize(static_cast<Eigen::Index>(c.n));
    for (Eigen::Index i = 0; i < base.y_base.size(); ++i) base.y_base(i) = noise(rng);
    return base;
}

ReplicateRecord record_for(const CausalSet& causal, const std::vector<Index>& paths, const std::vector<Index>& feats)
{
    ReplicateRecord r;
    r.metrics = power_fpr(paths, causal.pathways, feats, causal.features);
    r.n_pathways = paths.size();
    r.n_features = feats.size();
    for (Index j : feats)
        if (std::binary_search(causal.features.begin(), causal.features.end(), j)) ++r.causal_features_hit;
    return r;
}

std::vector<ReplicateRecord> run_replicate(
    const StudyConfig& c, const PathwayMap& map, const ExpandedIndex& expanded, const ReplicateBase& base, double gamma
)
{
    const Effect effect = inject_effects(base.y_base, base.genotypes.genotype.values, base.causal.features, gamma, base.genotypes.maf, c.y_mean);
    const StandardizedData data = standardize_arrays(base.genotypes.genotype.values, effect.y);
    SglConfig cfg;
    cfg.alpha = c.alpha;
    cfg.threads = 1;
    cfg.lambda = c.lambda_fraction * lambda_grid(data, map, c.alpha, {}, 1).lambda_max;

    std::vector<ReplicateRecord> out;
    auto push = [&](const std::string& method, const std::vector<Index>& paths, const std::vector<Index>& feats, double lambda, bool converged) {
        ReplicateRecord r = record_for(base.causal, paths, feats);
        r.method = method;
        r.gamma = gamma;
        r.lambda = lambda;
        r.converged = converged;
        out.push_back(std::move(r));
    };

    const SglFit bcgd = fit_sgl_bcgd(data, map, expanded, cfg);
    if (c.study == 1) {
        push("sgl", bcgd.selected_pathways, bcgd.selected_features, cfg.lambda, bcgd.converged);
        const auto match = match_lasso_cardinality(data, bcgd.selected_features.size());
        std::vector<Index> feats;
        for (Eigen::Index j = 0; j < match.beta.size(); ++j)
            if (match.beta(j) != 0.0) feats.push_back(static_cast<Index>(j));
        push("lasso", pathways_touching(map, feats), feats, match.lambda, true);
        out.back().exact_match = match.exact;
    } else {
        const SglFit cgd = fit_sgl_cgd(data, map, cfg);
        push("bcgd", bcgd.selected_pathways, bcgd.selected_features, cfg.lambda, bcgd.converged);
        push("cgd", cgd.selected_pathways, cgd.selected_features, cfg.lambda, cgd.converged);
    }
    return out;
}

} // namespace

StudyDataset make_study_dataset(const StudyConfig& config, double gamma, Index replicate)
{
    config.validate();
    StudyDataset d;
    d.map = study_map(config);
    ReplicateBase base = make_base(config, d.map, replicate);
    d.effect = inject_effects(base.y_base, base.genotypes.genotype.values, base.causal.features, gamma, base.genotypes.maf, config.y_mean);
    d.genotypes = std::move(base.genotypes);
    d.causal = std::move(base.causal);
    return d;
}

StudyReport run_study(const StudyConfig& config)
{
    config.validate();
    const PathwayMap map = study_map(config);
    const ExpandedIndex expanded = expand_overlaps(map);
    const Index G = config.gammas.size();
    const Index R = config.replicates;
    const std::vector<std::string> methods = config.study == 1 ? std::vector<std::string>{"sgl", "lasso"} : std::vector<std::string>{"bcgd", "cgd"};

    std::vector<std::vector<std::vector<ReplicateRecord>>> slots(R, std::vector<std::vector<ReplicateRecord>>(G));
    std::vector<std::string> errors(R);
    parallel_for(R, config.threads, [&](std::size_t r) {
        try {
            const ReplicateBase base = make_base(config, map, r);
            for (Index g = 0; g < G; ++g) {
                slots[r][g] = run_replicate(config, map, expanded, base, config.gammas[g]);
                for (auto& rec : slots[r][g]) rec.replicate = r;
            }
        } catch (const std::exception& e) {
            errors[r] = "replicate " + std::to_string(r) + ": " + e.what();
        }
    });

    StudyReport report;
    report.config = config;
    for (const auto& e : errors)
        if (!e.empty()) report.failures.push_back(e);
    for (Index g = 0; g < G; ++g)
        for (Index r = 0; r < R; ++r)
            for (const auto& rec : slots[r][g]) report.records.push_back(rec);

    for (Index g = 0; g < G; ++g) {
        for (const auto& m : methods) {
            MethodSummary s;
            s.gamma = config.gammas[g];
            s.method = m;
            s.power_histogram.assign(config.n_causal + 1, 0);
            for (Index r = 0; r < R; ++r) {
                for (const auto& rec : slots[r][g]) {
                    if (rec.method != m) continue;
                    ++s.replicates;
                    s.mean_pathway_power += rec.metrics.pathway_power;
                    s.mean_pathway_fpr += rec.metrics.pathway_fpr;
                    s.mean_feature_power += rec.metrics.feature_power;
                    s.mean_feature_fpr += rec.metrics.feature_fpr;
                    s.mean_pathways += static_cast<double>(rec.n_pathways);
                    s.mean_features += static_cast<double>(rec.n_features);
                    ++s.power_histogram[std::min(rec.causal_features_hit, config.n_causal)];
                    if (!rec.converged) ++s.nonconverged;
                    if (!rec.exact_match) ++s.inexact_matches;
                }
            }
            if (s.replicates > 0) {
                const auto n = static_cast<double>(s.replicates);
                s.mean_pathway_power /= n;
                s.mean_pathway_fpr /= n;
                s.mean_feature_power /= n;
                s.mean_feature_fpr /= n;
                s.mean_pathways /= n;
                s.mean_features /= n;
            }
            report.summaries.push_back(std::move(s));
        }
    }
    return report;
}

StudyReport run_study1(const StudyConfig& config)
{
    require(config.study == 1, ErrorCode::InvalidArgument, "config is not for study 1");
    return run_study(config);
}

StudyReport run_study2(const StudyConfig& config)
{
    require(config.study == 2, ErrorCode::InvalidArgument, "config is not for study 2");
    return run_study(config);
}

void write_study_tsv(const std::filesystem::path& path, const StudyReport& report)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
    out << "gamma\treplicate\tmethod\tpathway_power\tpathway_fpr\tfeature_power\tfeature_fpr\t"
           "n_pathways\tn_features\tcausal_hit\tlambda\tconverged\texact_match\n";
    char buf[512];
    for (const auto& r : report.records) {
        std::snprintf(
            buf, sizeof buf, "%.6g\t%zu\t%s\t%.6g\t%.6g\t%.6g\t%.6g\t%zu\t%zu\t%zu\t%.10g\t%d\t%d\n", r.gamma, r.replicate,
            r.method.c_str(), r.metrics.pathway_power, r.metrics.pathway_fpr, r.metrics.feature_power, r.metrics.feature_fpr,
            r.n_pathways, r.n_features, r.causal_features_hit, r.lambda, r.converged ? 1 : 0, r.exact_match ? 1 : 0
        );
        out << buf;
    }
}

} // namespace pathsgl
