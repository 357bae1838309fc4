#include <doctest.h>

#include <pathsgl/serialize.hpp>
#include <pathsgl/simulation.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <functional>
#include <set>

#include "generators.hpp"
#include "test_util.hpp"

using namespace pathsgl;

namespace {

ErrorCode code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::InvalidArgument;
}

std::set<Index> members(const PathwayMap& map, Index l)
{
    const auto& m = map.pathways[l].members;
    return {m.begin(), m.end()};
}

std::set<Index> minus(const std::set<Index>& a, const std::set<Index>& b)
{
    std::set<Index> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

Index intersection_size(const std::set<Index>& a, const std::set<Index>& b)
{
    Index n = 0;
    for (Index x : a) n += b.count(x);
    return n;
}

StudyConfig small_config(int study)
{
    auto c = StudyConfig::defaults(study);
    c.n = 80;
    c.n_pathways = 6;
    if (study == 1) c.p = 120;
    else c.p = c.n_pathways * (c.pathway_size - c.overlap) + c.overlap;
    c.gammas = {0.0, 0.12};
    c.replicates = 4;
    c.seed = 77;
    return c;
}

} // namespace

TEST_CASE("genotype sampling follows Hardy-Weinberg proportions")
{
    const Index N = 100000;
    SUBCASE("m = 0.5 gives 1/4, 1/2, 1/4")
    {
        const auto g = simulate_genotypes(N, 1, 0.5, 0.5, 3);
        CHECK(g.maf(0) == 0.5);
        const double probs[3] = {0.25, 0.5, 0.25};
        for (int c = 0; c < 3; ++c) {
            const double freq = (g.genotype.values.col(0).array() == c).cast<double>().mean();
            CHECK(std::abs(freq - probs[c]) <= 3.0 * std::sqrt(probs[c] * (1 - probs[c]) / N));
        }
    }
    SUBCASE("allele frequency is within three binomial standard errors of the MAF")
    {
        const auto g = simulate_genotypes(N, 6, 0.1, 0.5, 5);
        for (Index j = 0; j < 6; ++j) {
            const double m = g.maf(j);
            CHECK(m >= 0.1);
            CHECK(m <= 0.5);
            const double af = g.genotype.values.col(j).mean() / 2.0;
            CHECK(std::abs(af - m) <= 3.0 * std::sqrt(m * (1 - m) / (2.0 * N)));
        }
    }
    SUBCASE("shape, identifiers and prefix stability")
    {
        const auto g = simulate_genotypes(400, 2500, 0.1, 0.5, 9);
        CHECK(g.genotype.n_samples() == 400);
        CHECK(g.genotype.n_features() == 2500);
        CHECK((g.genotype.values.array() >= 0).all());
        CHECK((g.genotype.values.array() <= 2).all());
        CHECK_NOTHROW(g.genotype.validate());
        // feature j has its own substream, so a narrower draw is a column prefix
        const auto h = simulate_genotypes(400, 10, 0.1, 0.5, 9);
        CHECK(h.genotype.values == g.genotype.values.leftCols(10));
    }
}

TEST_CASE("default study scale")
{
    const auto c = StudyConfig::defaults(1);
    CHECK(c.p == 2500);
    CHECK(c.n == 400);
    CHECK(c.n_pathways == 50);
    CHECK(c.alpha == 0.8);
    CHECK(c.lambda_fraction == 0.85);
    const auto c2 = StudyConfig::defaults(2);
    CHECK(c2.alpha == 0.85);
    CHECK(c2.n_causal == 10);
    CHECK(c2.p == 1010);
}

TEST_CASE("study topologies")
{
    SUBCASE("study 1 blocks")
    {
        const auto map = build_study1_pathways();
        CHECK(map.n_pathways() == 50);
        CHECK(map.n_features() == 2500);
        std::vector<int> seen(2500, 0);
        for (const auto& pw : map.pathways) {
            CHECK(pw.members.size() == 50);
            for (Index j : pw.members) ++seen[j];
        }
        CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
        CHECK(map.n_genes() == 500);
        CHECK_NOTHROW(map.validate());
        CHECK(code_of([] { build_study1_pathways(2500, 49); }) == ErrorCode::InvalidTopology);
    }
    SUBCASE("study 2 chain")
    {
        const auto map = build_study2_pathways();
        CHECK(map.n_pathways() == 50);
        CHECK(map.n_features() == 1010);
        std::set<Index> all;
        for (Index l = 0; l < 50; ++l) {
            const auto g = members(map, l);
            CHECK(g.size() == 30);
            all.insert(g.begin(), g.end());
            if (l + 1 < 50) CHECK(intersection_size(g, members(map, l + 1)) == 10);
            if (l + 2 < 50) CHECK(intersection_size(g, members(map, l + 2)) == 0);
        }
        CHECK(all.size() == 1010);
        CHECK(map.expanded_width() == 1500);
        CHECK(code_of([] { build_study2_pathways(5, 30, 30); }) == ErrorCode::InvalidTopology);
    }
}

TEST_CASE("study 1 causal draws")
{
    const auto map = build_study1_pathways();
    SUBCASE("enriched draws share one pathway")
    {
        for (std::uint64_t s = 0; s < 50; ++s) {
            const auto c = choose_causal_study1(map, 5, true, s);
            CHECK(c.features.size() == 5);
            CHECK(std::is_sorted(c.features.begin(), c.features.end()));
            CHECK(c.pathways == std::vector<Index>{c.anchor});
            for (Index j : c.features) CHECK(members(map, c.anchor).count(j) == 1);
        }
    }
    SUBCASE("random placement is reproducible and distinct")
    {
        const auto a = choose_causal_study1(map, 5, false, 11);
        const auto b = choose_causal_study1(map, 5, false, 11);
        CHECK(a.features == b.features);
        CHECK(std::set<Index>(a.features.begin(), a.features.end()).size() == 5);
        CHECK(choose_causal_study1(map, 5, false, 12).features != a.features);
    }
    SUBCASE("pathway choice is uniform")
    {
        std::vector<double> counts(50, 0.0);
        const int draws = 10000;
        for (int s = 0; s < draws; ++s) counts[choose_causal_study1(map, 5, true, static_cast<std::uint64_t>(s)).anchor] += 1.0;
        const double expected = draws / 50.0;
        double chi2 = 0.0;
        for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
        const boost::math::chi_squared dist(49);
        CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
    }
}

TEST_CASE("study 2 causal draws")
{
    const auto map = build_study2_pathways();
    const Index L = map.n_pathways();
    SUBCASE("eligible pools match set arithmetic on the chain")
    {
        for (Index l = 0; l + 1 < L; ++l) {
            CAPTURE(l);
            auto left = members(map, l);
            if (l > 0) left = minus(left, members(map, l - 1));
            auto right = members(map, l + 1);
            if (l + 2 < L) right = minus(right, members(map, l + 2));
            std::set<Index> expected = left;
            expected.insert(right.begin(), right.end());
            const auto pool = study2_eligible_pool(map, l);
            CHECK(std::set<Index>(pool.begin(), pool.end()) == expected);
            CHECK(pool.size() == (l == 0 || l + 2 == L ? 40u : 30u));
        }
    }
    SUBCASE("draws avoid the outer neighbours and hit one or two pathways")
    {
        Index two = 0;
        for (std::uint64_t s = 0; s < 300; ++s) {
            const auto c = choose_causal_study2(map, 10, s);
            const Index l = c.anchor;
            CHECK(l + 1 < L);
            CHECK(c.features.size() == 10);
            for (Index j : c.features) {
                if (l > 0) CHECK(members(map, l - 1).count(j) == 0);
                if (l + 2 < L) CHECK(members(map, l + 2).count(j) == 0);
                CHECK((members(map, l).count(j) + members(map, l + 1).count(j)) >= 1);
            }
            CHECK(c.pathways.size() >= 1);
            CHECK(c.pathways.size() <= 2);
            for (Index q : c.pathways) CHECK((q == l || q == l + 1));
            two += c.pathways.size() == 2;
        }
        CHECK(two >= 295);
    }
}

TEST_CASE("effect injection")
{
    SUBCASE("amplitude example")
    {
        Matrix counts = Matrix::Zero(4, 5);
        Vector maf(5);
        maf << 0.3, 0.3, 0.3, 0.3, 0.3;
        const auto e = inject_effects(Vector::Constant(4, 10.0), counts, {0, 1, 2, 3, 4}, 0.05, maf);
        CHECK(e.delta == doctest::Approx(0.8333333333333334).epsilon(1e-14));
        CHECK(e.y == Vector::Constant(4, 10.0));
    }
    SUBCASE("per-sample effect uses raw counts")
    {
        Matrix counts(2, 3);
        counts << 2, 0, 1,
                  1, 1, 0;
        Vector maf(3);
        maf << 0.2, 0.4, 0.5;
        const auto e = inject_effects(Vector::Zero(2), counts, {0, 2}, 0.1, maf);
        const double delta = 2 * 0.1 * 10 / (2 * 0.7);
        CHECK(e.delta == doctest::Approx(delta));
        CHECK(e.y(0) == doctest::Approx(delta * 3.0 / 2.0));
        CHECK(e.y(1) == doctest::Approx(delta * 1.0 / 2.0));
    }
    SUBCASE("zero effect leaves the response unchanged")
    {
        gen::Source src(1);
        const Matrix counts = gen::genotype_counts(src, 20, 4);
        Vector y(20);
        for (Index i = 0; i < 20; ++i) y(i) = src.normal();
        Vector maf = Vector::Constant(4, 0.3);
        CHECK(inject_effects(y, counts, {1, 3}, 0.0, maf).y == y);
        CHECK(code_of([&] { inject_effects(y, counts, {1}, 0.1, Vector::Zero(4)); }) == ErrorCode::ZeroMafSum);
    }
    SUBCASE("mean effect is gamma times the mean response")
    {
        const Index N = 100000;
        const double gamma = 0.12;
        const auto g = simulate_genotypes(N, 5, 0.1, 0.5, 21);
        const auto e = inject_effects(Vector::Zero(static_cast<Eigen::Index>(N)), g.genotype.values, {0, 1, 2, 3, 4}, gamma, g.maf);
        const double mean = e.y.mean();
        const double sd = std::sqrt((e.y.array() - mean).square().sum() / (N - 1));
        CHECK(std::abs(mean / 10.0 - gamma) <= 3.0 * sd / std::sqrt(static_cast<double>(N)) / 10.0);
    }
}

TEST_CASE("power and false positive rate")
{
    const auto m = power_fpr({1, 2}, {2, 3}, {5}, {5, 6});
    CHECK(m.pathway_power == 0.5);
    CHECK(m.pathway_fpr == 0.5);
    CHECK(m.feature_power == 0.5);
    CHECK(m.feature_fpr == 0.0);
    const auto same = power_fpr({4, 7}, {4, 7}, {1, 2, 3}, {1, 2, 3});
    CHECK(same.pathway_power == 1.0);
    CHECK(same.pathway_fpr == 0.0);
    CHECK(same.feature_power == 1.0);
    const auto empty = power_fpr({}, {2}, {}, {9});
    CHECK(empty.pathway_power == 0.0);
    CHECK(empty.pathway_fpr == 0.0);
    CHECK(empty.feature_fpr == 0.0);
    CHECK(code_of([] { power_fpr({1}, {}, {1}, {1}); }) == ErrorCode::EmptyTruth);
    CHECK(code_of([] { power_fpr({1}, {1}, {1}, {}); }) == ErrorCode::EmptyTruth);
}

TEST_CASE("study runner")
{
    for (int study : {1, 2}) {
        CAPTURE(study);
        auto cfg = small_config(study);
        const auto a = run_study(cfg);
        const auto b = run_study(cfg);
        cfg.threads = 3;
        const auto c = run_study(cfg);
        const std::string ja = study_to_json(a).dump();
        CHECK(ja == study_to_json(b).dump());
        CHECK(ja == study_to_json(c).dump());

        const auto methods = study == 1 ? std::vector<std::string>{"sgl", "lasso"} : std::vector<std::string>{"bcgd", "cgd"};
        CHECK(a.records.size() == cfg.gammas.size() * methods.size() * cfg.replicates);
        for (double g : cfg.gammas) {
            for (const auto& m : methods) {
                const auto& s = a.summary(g, m);
                CHECK(s.replicates == cfg.replicates);
                CHECK(s.power_histogram.size() == cfg.n_causal + 1);
                Index total = 0;
                for (Index h : s.power_histogram) total += h;
                CHECK(total == cfg.replicates);
            }
        }
        for (const auto& r : a.records) {
            // power can only take values k / |S|
            const double scaled = r.metrics.feature_power * static_cast<double>(cfg.n_causal);
            CHECK(scaled == doctest::Approx(std::round(scaled)));
            CHECK(r.causal_features_hit == static_cast<Index>(std::round(scaled)));
        }

        // the dataset helper reproduces the runner's replicate
        const auto ds = make_study_dataset(cfg, cfg.gammas.back(), 1);
        CHECK(ds.map.n_features() == cfg.p);
        CHECK(ds.causal.features.size() == cfg.n_causal);
        CHECK(ds.effect.y.size() == cfg.n);
        const auto again = make_study_dataset(cfg, cfg.gammas.back(), 1);
        CHECK(again.effect.y == ds.effect.y);
        CHECK(again.genotypes.genotype.values == ds.genotypes.genotype.values);
    }
}

TEST_CASE("study configs round-trip through JSON and reports write TSV")
{
    auto cfg = StudyConfig::defaults(2);
    cfg.seed = 123456789012345ULL;
    cfg.gammas = {0.01, 0.5};
    cfg.threads = 2;
    const auto back = study_config_from_json(study_config_to_json(cfg));
    CHECK(study_config_to_json(back).dump() == study_config_to_json(cfg).dump());
    CHECK(back.seed == cfg.seed);
    CHECK(back.alpha == 0.85);

    const auto partial = study_config_from_json(Json{{"study", 2}, {"replicates", 7}});
    CHECK(partial.replicates == 7);
    CHECK(partial.n_causal == 10);
    CHECK_THROWS_AS(study_config_from_json(Json{{"n_pathways", 3}}), Error);

    auto small = small_config(1);
    small.replicates = 2;
    const auto report = run_study(small);
    testutil::TempDir dir;
    write_study_tsv(dir / "study.tsv", report);
    const auto text = testutil::read_file(dir / "study.tsv");
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(report.records.size() + 1));

    auto bad = StudyConfig::defaults(1);
    bad.alpha = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}
