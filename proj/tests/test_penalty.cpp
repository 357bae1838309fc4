#include <doctest.h>

#include <pathsgl/penalty.hpp>
#include <pathsgl/simulation.hpp>

#include "generators.hpp"
#include "oracles.hpp"

using namespace pathsgl;

TEST_CASE("lambda star")
{
    Vector z(2);
    z << 2.0, -4.0;
    CHECK(lambda_star(z, 0.5) == 8.0);
    CHECK(lambda_star(Vector::Zero(3), 0.5) == 0.0);
    CHECK_THROWS_AS(lambda_star(z, 0.0), Error);

    gen::Source src(2);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix X(6, 3);
        Vector y(6);
        for (int i = 0; i < 6; ++i) {
            y(i) = src.normal();
            for (int j = 0; j < 3; ++j) X(i, j) = src.normal();
        }
        const double alpha = src.uniform(0.1, 1.0);
        CHECK(lambda_star(X, y, alpha) == doctest::Approx((X.transpose() * y).cwiseAbs().maxCoeff() / alpha));
    }
}

TEST_CASE("entry penalty of a single feature is linear in its correlation")
{
    Vector z(1);
    z << 2.0;
    CHECK(lambda_min_from_correlations(z, 0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-10));
    // doubling the weight: c / (alpha + 2(1 - alpha))
    CHECK(lambda_min_from_correlations(z, 0.5, 2.0) == doctest::Approx(2.0 / 1.5).epsilon(1e-10));
    CHECK(lambda_min_from_correlations(Vector::Zero(2), 0.5, 1.0) == 0.0);
}

TEST_CASE("entry penalty endpoints in alpha")
{
    Vector z(3);
    z << 1.0, -2.0, 0.5;
    CHECK(lambda_min_from_correlations(z, 0.0, 2.0) == doctest::Approx(z.norm() / 2.0));
    CHECK(lambda_min_from_correlations(z, 1.0, 2.0) == doctest::Approx(2.0));
}

TEST_CASE("two-feature root changes the sign of the gate")
{
    Vector z(2);
    z << 1.3, -0.4;
    const double alpha = 0.6, w = 1.0;
    const double l = lambda_min_from_correlations(z, alpha, w);
    auto g = [&](double x) { return oracle::soft(z, alpha * x).squaredNorm() - (1 - alpha) * (1 - alpha) * x * x * w * w; };
    CHECK(g(l - 1e-8) > 0.0);
    CHECK(g(l + 1e-8) < 0.0);
    CHECK(l == doctest::Approx(oracle::lambda_entry_bisect(z, alpha, w)).epsilon(1e-10));
}

TEST_CASE("property: gate equality and bisection agreement")
{
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        CAPTURE(seed);
        gen::Source src(seed);
        const Index p = src.uniform_index(1, 12);
        Vector z(static_cast<Eigen::Index>(p));
        for (Index j = 0; j < p; ++j) z(j) = src.normal() * src.uniform(0.1, 5.0);
        const double alpha = src.uniform(0.01, 0.99), w = src.uniform(0.2, 4.0);
        const double l = lambda_min_from_correlations(z, alpha, w);
        CHECK(l > 0.0);
        CHECK(l <= lambda_star(z, alpha) * (1 + 1e-12));
        CHECK(std::abs(oracle::soft(z, alpha * l).norm() - (1 - alpha) * l * w) < 1e-8);
        CHECK(std::abs(l - oracle::lambda_entry_bisect(z, alpha, w)) < 1e-9 * std::max(1.0, l));
    }
}

TEST_CASE("property: lambda max is nonincreasing in every weight")
{
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        CAPTURE(seed);
        gen::Source src(seed * 5);
        auto inst = gen::sgl_instance(src, 40, {4, 3, 5});
        const double alpha = src.uniform(0.0, 1.0);
        std::vector<double> w{1.0, 1.0, 1.0};
        double prev = lambda_max(inst.data, inst.map, alpha, w);
        for (int step = 0; step < 5; ++step) {
            w[src.uniform_index(0, 2)] *= src.uniform(1.0, 2.0);
            const double cur = lambda_max(inst.data, inst.map, alpha, w);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("lambda max bounds the empty model")
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CAPTURE(seed);
        gen::Source src(seed * 11);
        auto inst = gen::sgl_instance(src, 50, {5, 4, 6});
        SglConfig cfg;
        cfg.alpha = src.uniform(0.05, 0.95);
        const auto grid = lambda_grid(inst.data, inst.map, cfg.alpha, {});
        cfg.lambda = 1.0001 * grid.lambda_max;
        CHECK(fit_sgl_cgd(inst.data, inst.map, cfg).selected_pathways.empty());
        cfg.lambda = 0.9999 * grid.lambda_max;
        const auto fit = fit_sgl_cgd(inst.data, inst.map, cfg);
        CHECK(fit.selected_pathways == std::vector<Index>{grid.argmax});
        for (Index l = 0; l < inst.map.n_pathways(); ++l) CHECK(grid.lambda_min[l] <= grid.lambda_max);
    }
}

TEST_CASE("duplicating pathways leaves lambda max unchanged and ties go to the lowest index")
{
    gen::Source src(13);
    auto inst = gen::sgl_instance(src, 40, {4, 4});
    const auto once = lambda_grid(inst.data, inst.map, 0.7, {});
    const auto twice_map = gen::map_from_groups(8, {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 2, 3}, {4, 5, 6, 7}});
    const auto twice = lambda_grid(inst.data, twice_map, 0.7, {});
    CHECK(twice.lambda_max == once.lambda_max);
    CHECK(twice.argmax == once.argmax);
}

TEST_CASE("cardinality matching")
{
    SUBCASE("target zero is the lasso lambda max")
    {
        gen::Source src(61);
        auto inst = gen::sgl_instance(src, 40, {8});
        const auto m = match_lasso_cardinality(inst.data, 0);
        CHECK(m.count == 0);
        CHECK(m.exact);
        CHECK(m.lambda == doctest::Approx(lasso_lambda_max(inst.data.X, inst.data.y)));
    }
    SUBCASE("orthonormal design brackets the target between ordered correlations")
    {
        gen::Source src(67);
        Matrix A(30, 8);
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 8; ++j) A(i, j) = src.normal();
        const Matrix Q = Eigen::HouseholderQR<Matrix>(A).householderQ() * Matrix::Identity(30, 8);
        Vector y(30);
        for (int i = 0; i < 30; ++i) y(i) = src.normal();
        Vector c = (Q.transpose() * y).cwiseAbs();
        std::vector<double> sorted(c.data(), c.data() + c.size());
        std::sort(sorted.rbegin(), sorted.rend());
        for (Index k = 1; k < 8; ++k) {
            CAPTURE(k);
            const auto m = match_lasso_cardinality(Q, y, k);
            CHECK(m.exact);
            CHECK(m.count == k);
            CHECK(m.lambda < sorted[k - 1]);
            CHECK(m.lambda >= sorted[k]);
        }
    }
    SUBCASE("simulated instances match or flag")
    {
        auto cfg = StudyConfig::defaults(1);
        cfg.seed = 5;
        for (Index r = 0; r < 3; ++r) {
            const auto ds = make_study_dataset(cfg, 0.12, r);
            const auto data = standardize_arrays(ds.genotypes.genotype.values, ds.effect.y);
            for (Index target : {Index{3}, Index{10}, Index{25}}) {
                const auto m = match_lasso_cardinality(data, target);
                CHECK((m.beta.array() != 0.0).count() == static_cast<Eigen::Index>(m.count));
                if (m.exact) CHECK(m.count == target);
                else CHECK(m.count > target);
            }
        }
    }
}
