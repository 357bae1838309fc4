#include <doctest.h>

#include <pathsgl/random.hpp>
#include <pathsgl/rank_compare.hpp>

#include <map>
#include <numeric>

#include "generators.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace pathsgl;

namespace {

RankArray full(std::initializer_list<Index> ranks)
{
    return RankArray::full(std::vector<Index>(ranks));
}

std::vector<int> as_int(const RankArray& a)
{
    return std::vector<int>(a.rank.begin(), a.rank.end());
}

RankArray random_full(gen::Source& src, Index p)
{
    auto perm = gen::random_permutation(src, p);
    for (auto& r : perm) ++r;
    return RankArray::full(perm);
}

std::vector<std::string> ids(const std::string& prefix, Index from, Index to)
{
    std::vector<std::string> out;
    for (Index i = from; i < to; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

} // namespace

TEST_CASE("top-k distance examples")
{
    const auto t = full({1, 2, 3});
    CHECK(canberra_topk(t, t, 1) == 0.0);
    CHECK(canberra_topk(t, t, 3) == 0.0);
    CHECK(canberra_topk(t, full({2, 1, 3}), 3) == doctest::Approx(2.0 / 3.0));
    CHECK(canberra_topk(full({1, 2, 3, 4}), full({3, 4, 1, 2}), 2) == doctest::Approx(1.4));
    CHECK_THROWS_AS(canberra_topk(t, full({1, 2}), 1), Error);
}

TEST_CASE("property: profile, symmetry and the capped tail")
{
    gen::Source src(3);
    for (int rep = 0; rep < 100; ++rep) {
        const Index p = src.uniform_index(1, 30);
        const auto a = random_full(src, p);
        auto b = random_full(src, p);
        // sometimes make part of b unranked
        if (rep % 3 == 0 && p > 2) {
            const Index ranked = src.uniform_index(1, p - 1);
            for (Index i = 0; i < p; ++i) {
                if (b.rank[i] > ranked) {
                    b.rank[i] = p;
                    b.ranked[i] = false;
                }
            }
            b.fill = p;
        }
        const auto prof = canberra_profile(a, b, 1, p);
        for (Index k = 1; k <= p; ++k) {
            CAPTURE(k);
            const double direct = oracle::canberra(as_int(a), as_int(b), static_cast<int>(k));
            CHECK(prof[k - 1] == doctest::Approx(direct).epsilon(1e-12));
            CHECK(canberra_topk(a, b, k) == doctest::Approx(direct).epsilon(1e-12));
            CHECK(canberra_topk(b, a, k) == doctest::Approx(direct).epsilon(1e-12));
            CHECK(canberra_topk(a, a, k) == 0.0);
        }
    }
    // items ranked beyond k in both lists add nothing
    CHECK(canberra_topk(full({1, 2, 3, 4, 5}), full({1, 2, 5, 4, 3}), 2) == 0.0);
}

TEST_CASE("expected distance")
{
    CHECK(expected_canberra(1, 1, 100, 1) == 0.0);
    CHECK(oracle::expected_canberra_exhaustive(2, 2) == doctest::Approx(1.0 / 3.0));
    CHECK(expected_canberra(2, 2, 20000, 3) == doctest::Approx(1.0 / 3.0).epsilon(0.03));

    // p = 10 against exhaustive enumeration of all 10! relative permutations
    const double exact = oracle::expected_canberra_exhaustive(10, 10);
    gen::Source src(5);
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < 4000; ++i) {
        const auto a = random_full(src, 10), b = random_full(src, 10);
        const double c = oracle::canberra(as_int(a), as_int(b), 10);
        s += c;
        s2 += c * c;
    }
    const double sd = std::sqrt(s2 / 4000 - (s / 4000) * (s / 4000));
    const Index M = 20000;
    const double est = expected_canberra(10, 10, M, 11);
    CHECK(std::abs(est - exact) <= 3.0 * sd / std::sqrt(static_cast<double>(M)));

    const auto prof = expected_canberra_profile(1, 10, 10, 500, 17, 1);
    const auto prof_threads = expected_canberra_profile(1, 10, 10, 500, 17, 4);
    CHECK(prof == prof_threads);
    CHECK(prof[9] == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("normalized distance")
{
    const auto t = full({1, 2, 3, 4});
    CHECK(normalized_canberra(t, t, 3, 1.7) == 0.0);
    CHECK(normalized_canberra(t, t, 3, 0.0) == 0.0);
    const auto s = full({2, 1, 4, 3});
    const double ca = canberra_topk(t, s, 4);
    CHECK(normalized_canberra(t, s, 4, ca) == doctest::Approx(1.0));
    CHECK_THROWS_AS(normalized_canberra(t, s, 4, 0.0), Error);

    gen::Source src(7);
    const double e = expected_canberra(25, 100, 1000, 19);
    double sum = 0.0;
    for (int i = 0; i < 1000; ++i) sum += normalized_canberra(random_full(src, 100), random_full(src, 100), 25, e);
    const double mean = sum / 1000.0;
    CHECK(mean >= 0.95);
    CHECK(mean <= 1.05);
}

TEST_CASE("permutation p-values")
{
    const auto t = full({1, 2, 3, 4, 5, 6, 7, 8});
    const auto same = permutation_pvalues(t, t, 1, 8, 200, 3);
    for (double p : same) CHECK(p == 1.0);

    const auto single = permutation_pvalues(t, full({2, 1, 3, 5, 4, 6, 8, 7}), 1, 8, 1, 3);
    for (double p : single) CHECK((p == 0.0 || p == 1.0));

    gen::Source src(9);
    double sum = 0.0;
    int n = 0;
    for (int rep = 0; rep < 300; ++rep) {
        const auto a = random_full(src, 30), b = random_full(src, 30);
        const auto pv = permutation_pvalues(a, b, 10, 10, 100, static_cast<std::uint64_t>(rep));
        sum += pv[0];
        ++n;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.1));

    const auto a = random_full(src, 20), b = random_full(src, 20);
    CHECK(permutation_pvalues(a, b, 1, 20, 300, 5, 1) == permutation_pvalues(a, b, 1, 20, 300, 5, 4));
}

TEST_CASE("permutations keep unranked variables fixed")
{
    // sigma ranks only the first three variables; the rest sit at the fill rank
    const auto pair = build_rank_arrays(ids("v", 0, 6), {"v2", "v0", "v1"});
    const auto pv = permutation_pvalues(pair.tau, pair.sigma, 1, 3, 500, 7);
    // only 3! = 6 distinct shuffles exist, so p-values are multiples of 1/500 bounded below by the identity's share
    for (double p : pv) CHECK(p > 0.0);
}

TEST_CASE("BH q-values")
{
    for (double q : bh_qvalues({0.01, 0.02, 0.03, 0.04})) CHECK(q == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(bh_qvalues({1.0, 1.0, 1.0}) == std::vector<double>{1.0, 1.0, 1.0});
    CHECK(bh_qvalues({0.3}) == std::vector<double>{0.3});
    CHECK_THROWS_AS(bh_qvalues({0.5, 1.2}), Error);
    CHECK_THROWS_AS(bh_qvalues({-0.1}), Error);
    CHECK(bh_qvalues({}).empty());

    gen::Source src(11);
    for (int rep = 0; rep < 200; ++rep) {
        const Index m = src.uniform_index(1, 25);
        std::vector<double> p(m);
        for (auto& x : p) x = rep % 4 == 0 ? std::round(src.uniform(0, 1) * 10) / 10 : src.uniform(0, 1);
        const auto q = bh_qvalues(p);
        const auto ref = oracle::bh(p);
        for (Index i = 0; i < m; ++i) {
            CHECK(q[i] == doctest::Approx(ref[i]).epsilon(1e-12));
            CHECK(q[i] >= p[i]);
            CHECK(q[i] <= 1.0);
        }
        // monotone in p
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < m; ++j)
                if (p[i] <= p[j]) CHECK(q[i] <= q[j]);
        // equivariant under reordering
        const auto perm = gen::random_permutation(src, m);
        std::vector<double> pp(m);
        for (Index i = 0; i < m; ++i) pp[i] = p[perm[i]];
        const auto qq = bh_qvalues(pp);
        for (Index i = 0; i < m; ++i) CHECK(qq[i] == q[perm[i]]);
    }
}

TEST_CASE("rank arrays from ID lists")
{
    const auto pair = build_rank_arrays({"x", "y"}, {"y", "z"});
    CHECK(pair.p_star == 3);
    CHECK(pair.k_max == 2);
    CHECK(pair.universe == std::vector<std::string>{"x", "y", "z"});
    CHECK(pair.tau.rank == std::vector<Index>{1, 2, 3});
    CHECK(pair.sigma.rank == std::vector<Index>{3, 1, 2});
    CHECK(pair.tau.n_ranked() == 2);
    CHECK_FALSE(pair.sigma.ranked[0]);

    const auto same = build_rank_arrays({"a", "b", "c"}, {"a", "b", "c"});
    CHECK(same.tau.rank == same.sigma.rank);
    CHECK_THROWS_AS(build_rank_arrays({"a", "a"}, {"a"}), Error);
    CHECK_THROWS_AS(build_rank_arrays({}, {"a"}), Error);
}

TEST_CASE("gene-scale list shapes")
{
    // 3430 and 2815 ranked genes sharing 2332, union 3913
    auto a = ids("g", 0, 3430);
    auto b = ids("g", 0, 2332);
    const auto extra = ids("h", 0, 2815 - 2332);
    b.insert(b.end(), extra.begin(), extra.end());
    gen::Source src(13);
    std::shuffle(b.begin(), b.end(), src.rng);
    const auto pair = build_rank_arrays(a, b);
    CHECK(pair.p_star == 3913);
    CHECK(pair.k_max == 2815);
    Index both = 0;
    for (Index i = 0; i < pair.p_star; ++i) both += pair.tau.ranked[i] && pair.sigma.ranked[i];
    CHECK(both == 2332);
    CHECK(pair.tau.n_ranked() == 3430);
    CHECK(pair.sigma.n_ranked() == 2815);
    for (Index i = 0; i < pair.p_star; ++i) {
        if (!pair.tau.ranked[i]) CHECK(pair.tau.rank[i] == 3913);
        if (!pair.sigma.ranked[i]) CHECK(pair.sigma.rank[i] == 3913);
    }
}

TEST_CASE("consensus sets and mean ranks")
{
    const auto pair = build_rank_arrays({"A", "B", "D"}, {"B", "C", "A"});
    const auto psi = consensus_set(pair.tau, pair.sigma, 2);
    REQUIRE(psi.size() == 1);
    CHECK(pair.universe[psi[0].index] == "B");
    CHECK(psi[0].mean == 1.5);

    const auto t = full({3, 1, 2, 4});
    const auto self = consensus_set(t, t, 3);
    REQUIRE(self.size() == 3);
    CHECK(self[0].index == 1);
    CHECK(self[0].mean == 1.0);
    CHECK(self[2].index == 0);

    gen::Source src(17);
    for (int rep = 0; rep < 30; ++rep) {
        const auto a = random_full(src, 40), b = random_full(src, 40);
        const Index k = src.uniform_index(1, 40);
        auto x = consensus_set(a, b, k), y = consensus_set(b, a, k);
        REQUIRE(x.size() == y.size());
        for (Index i = 0; i < x.size(); ++i) {
            CHECK(x[i].index == y[i].index);
            CHECK(x[i].mean == y[i].mean);
            CHECK(a.rank[x[i].index] <= k);
            CHECK(b.rank[x[i].index] <= k);
        }
        Index expected = 0;
        for (Index i = 0; i < 40; ++i) expected += a.rank[i] <= k && b.rank[i] <= k;
        CHECK(x.size() == expected);
    }

    const auto disjoint = build_rank_arrays({"a", "b"}, {"c", "d"});
    const auto none = mean_rank_summary(disjoint.tau, disjoint.sigma);
    CHECK(none.empty_intersection);
    CHECK(none.entries.empty());

    const auto one = build_rank_arrays({"a", "b", "v", "c"}, {"d", "e", "f", "g", "v"});
    const auto single = mean_rank_summary(one.tau, one.sigma);
    REQUIRE(single.entries.size() == 1);
    CHECK(single.entries[0].mean == 4.0);

    // 100-variable pair against direct arithmetic
    auto la = ids("v", 0, 80), lb = ids("v", 20, 100);
    std::shuffle(la.begin(), la.end(), src.rng);
    std::shuffle(lb.begin(), lb.end(), src.rng);
    const auto big = build_rank_arrays(la, lb);
    const auto summary = mean_rank_summary(big.tau, big.sigma);
    std::map<std::string, double> want;
    for (Index i = 0; i < la.size(); ++i)
        for (Index j = 0; j < lb.size(); ++j)
            if (la[i] == lb[j]) want[la[i]] = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    REQUIRE(summary.entries.size() == want.size());
    for (Index i = 0; i < summary.entries.size(); ++i) {
        CHECK(summary.entries[i].mean == want[big.universe[summary.entries[i].index]]);
        if (i > 0) CHECK(summary.entries[i - 1].mean <= summary.entries[i].mean);
    }
}

TEST_CASE("comparison report")
{
    SUBCASE("identical lists")
    {
        const auto list = ids("p", 0, 30);
        CompareOptions opts;
        opts.expected_pairs = 200;
        opts.permutations = 100;
        const auto cmp = compare_rankings(list, list, opts);
        CHECK(cmp.k.size() == 30);
        for (double c : cmp.ca_star) CHECK(c == 0.0);
        for (double p : cmp.p_value) CHECK(p == 1.0);
        CHECK(cmp.argmin_k == 1);
        CHECK(cmp.consensus.size() == 1);
        CHECK(cmp.intersection == 30);
    }
    SUBCASE("similar lists are closer than almost every permutation")
    {
        auto a = ids("p", 0, 60);
        auto b = a;
        std::swap(b[0], b[1]);
        std::swap(b[10], b[12]);
        CompareOptions opts;
        opts.k_min = 5;
        opts.k_max = 20;
        opts.expected_pairs = 300;
        opts.permutations = 200;
        opts.consensus_k = 10;
        const auto cmp = compare_rankings(a, b, opts);
        CHECK(cmp.k.front() == 5);
        CHECK(cmp.k.back() == 20);
        for (Index i = 0; i < cmp.k.size(); ++i) {
            CHECK(cmp.ca_star[i] < 0.2);
            // p counts permutations at least as distant as the observed pair
            CHECK(cmp.p_value[i] >= 0.99);
            CHECK(cmp.q_value[i] >= cmp.p_value[i]);
        }
        CHECK(cmp.consensus_k == 10);
        CHECK(cmp.consensus.size() == 10);
        CHECK(cmp.argmin_k >= 5);
    }
    SUBCASE("k range is validated")
    {
        CompareOptions opts;
        opts.k_max = 5;
        CHECK_THROWS_AS(compare_rankings(ids("a", 0, 3), ids("a", 0, 4), opts), Error);
    }
}

TEST_CASE("ranked list files")
{
    testutil::TempDir dir;
    testutil::write_file(dir / "one.txt", "alpha\nbeta\ngamma\n");
    CHECK(load_ranked_list(dir / "one.txt") == std::vector<std::string>{"alpha", "beta", "gamma"});
    testutil::write_file(dir / "two.tsv", "id\trank\nbeta\t2\ngamma\t3\nalpha\t1\n");
    CHECK(load_ranked_list(dir / "two.tsv") == std::vector<std::string>{"alpha", "beta", "gamma"});
    testutil::write_file(dir / "bare.tsv", "beta 2\nalpha 1\n# comment\n");
    CHECK(load_ranked_list(dir / "bare.tsv") == std::vector<std::string>{"alpha", "beta"});
    testutil::write_file(dir / "ranking.tsv", "rank\tid\tfrequency\ttied\n1\tpw3\t0.9\t0\n2\tpw1\t0.5\t0\n");
    CHECK(load_ranked_list(dir / "ranking.tsv") == std::vector<std::string>{"pw3", "pw1"});
    testutil::write_file(dir / "bad.tsv", "id\trank\na\tx\n");
    CHECK_THROWS_AS(load_ranked_list(dir / "bad.tsv"), Error);
    CHECK_THROWS_AS(load_ranked_list(dir / "missing.txt"), Error);
}
