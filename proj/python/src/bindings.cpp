#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <pathsgl/penalty.hpp>
#include <pathsgl/rank_compare.hpp>
#include <pathsgl/serialize.hpp>
#include <pathsgl/simulation.hpp>
#include <pathsgl/stability.hpp>
#include <pathsgl/weight_tuning.hpp>

namespace py = pybind11;
using namespace pathsgl;

namespace {

py::object to_python(const Json& j)
{
    return py::module_::import("json").attr("loads")(j.dump());
}

// One gene per feature; pathway l holds the features listed in groups[l].
PathwayMap map_from_groups(Index p, const std::vector<std::vector<Index>>& groups)
{
    std::vector<std::string> features(p);
    std::vector<std::pair<std::string, std::string>> snp_gene;
    for (Index j = 0; j < p; ++j) {
        features[j] = "x" + std::to_string(j);
        snp_gene.emplace_back(features[j], features[j]);
    }
    std::vector<std::pair<std::string, std::vector<std::string>>> pathways;
    for (Index l = 0; l < groups.size(); ++l) {
        std::vector<std::string> genes;
        for (Index j : groups[l]) {
            require(j < p, ErrorCode::InvalidArgument, "group member out of range");
            genes.push_back(features[j]);
        }
        pathways.emplace_back("pathway" + std::to_string(l), std::move(genes));
    }
    return build_pathway_map(pathways, snp_gene, features);
}

struct Problem
{
    StandardizedData data;
    PathwayMap map;
};

Problem prepare(const Matrix& X, const Vector& y, const std::vector<std::vector<Index>>& groups)
{
    require(X.rows() == y.size(), ErrorCode::SampleMismatch, "X and y have different numbers of rows");
    Problem pr;
    pr.data = standardize_arrays(X, y);
    pr.map = drop_features(map_from_groups(static_cast<Index>(X.cols()), groups), pr.data.constant);
    return pr;
}

py::object fit(const Matrix& X, const Vector& y, const std::vector<std::vector<Index>>& groups, double alpha, double lambda_frac,
               const std::string& algorithm, const std::vector<double>& weights, unsigned threads)
{
    const Problem pr = prepare(X, y, groups);
    SglConfig cfg;
    cfg.alpha = alpha;
    cfg.weights = weights;
    cfg.threads = threads;
    cfg.validate(pr.map.n_pathways());
    const double lmax = lambda_grid(pr.data, pr.map, alpha, weights, threads).lambda_max;
    cfg.lambda = lambda_frac * lmax;
    const SglFit f = fit_sgl(pr.data, pr.map, cfg, parse_algorithm(algorithm));
    return to_python(fit_to_json(f, pr.map, lmax, lambda_frac));
}

double lambda_max_of(const Matrix& X, const Vector& y, const std::vector<std::vector<Index>>& groups, double alpha,
                     const std::vector<double>& weights)
{
    const Problem pr = prepare(X, y, groups);
    return lambda_grid(pr.data, pr.map, alpha, weights).lambda_max;
}

py::object rank(const Matrix& X, const Vector& y, const std::vector<std::vector<Index>>& groups, double alpha, double lambda_frac,
                Index B, bool null, const std::string& algorithm, std::uint64_t seed, unsigned threads)
{
    const Problem pr = prepare(X, y, groups);
    RankingConfig rc;
    rc.alpha = alpha;
    rc.lambda_fraction = lambda_frac;
    rc.subsamples = B;
    rc.algorithm = parse_algorithm(algorithm);
    rc.seed = seed;
    rc.threads = threads;
    const RankingResult r = null ? null_ranking(pr.data, pr.map, rc) : rank_by_stability(pr.data, pr.map, rc);
    py::dict out = to_python(ranking_to_json(r));
    out["pathway_frequency"] = Vector(r.pi_path);
    out["feature_frequency"] = Vector(r.pi_snp);
    return out;
}

py::object tune(const Matrix& X, const Vector& y, const std::vector<std::vector<Index>>& groups, double alpha, double eta,
                double epsilon, Index R, int max_iters, std::uint64_t seed, unsigned threads)
{
    const Problem pr = prepare(X, y, groups);
    TuneOptions opts;
    opts.alpha = alpha;
    opts.eta = eta;
    opts.epsilon = epsilon;
    opts.permutations = R;
    opts.max_iters = max_iters;
    opts.seed = seed;
    opts.threads = threads;
    return to_python(tune_to_json(tune_weights(pr.data, pr.map, opts), pr.map, opts));
}

py::object compare(const std::vector<std::string>& a, const std::vector<std::string>& b, Index k_min, Index k_max, Index M, Index Z,
                   std::uint64_t seed, unsigned threads)
{
    CompareOptions opts;
    opts.k_min = k_min;
    opts.k_max = k_max;
    opts.expected_pairs = M;
    opts.permutations = Z;
    opts.seed = seed;
    opts.threads = threads;
    return to_python(comparison_to_json(compare_rankings(a, b, opts)));
}

double canberra(const std::vector<Index>& tau, const std::vector<Index>& sigma, Index k)
{
    return canberra_topk(RankArray::full(tau), RankArray::full(sigma), k);
}

py::dict simulate(int study, double gamma, Index replicate, std::uint64_t seed, bool enriched)
{
    auto cfg = StudyConfig::defaults(study);
    cfg.seed = seed;
    cfg.enriched = enriched;
    const StudyDataset ds = make_study_dataset(cfg, gamma, replicate);
    std::vector<std::vector<Index>> groups;
    for (const auto& pw : ds.map.pathways) groups.push_back(pw.members);
    py::dict out;
    out["X"] = ds.genotypes.genotype.values;
    out["y"] = ds.effect.y;
    out["maf"] = ds.genotypes.maf;
    out["groups"] = groups;
    out["causal_features"] = ds.causal.features;
    out["causal_pathways"] = ds.causal.pathways;
    out["delta"] = ds.effect.delta;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Sparse group lasso for pathway-driven feature selection";
    m.attr("__version__") = kVersion;
    py::register_exception<Error>(m, "PathSglError", PyExc_ValueError);

    m.def("fit", &fit, py::arg("X"), py::arg("y"), py::arg("groups"), py::arg("alpha") = 0.95, py::arg("lambda_frac") = 0.95,
          py::arg("algorithm") = "cgd", py::arg("weights") = std::vector<double>{}, py::arg("threads") = 1,
          "Fit at lambda_frac * lambda_max. X holds raw allele counts; groups lists column indices per pathway.");
    m.def("lambda_max", &lambda_max_of, py::arg("X"), py::arg("y"), py::arg("groups"), py::arg("alpha") = 0.95,
          py::arg("weights") = std::vector<double>{});
    m.def("rank", &rank, py::arg("X"), py::arg("y"), py::arg("groups"), py::arg("alpha") = 0.95, py::arg("lambda_frac") = 0.95,
          py::arg("B") = 1000, py::arg("null") = false, py::arg("algorithm") = "cgd", py::arg("seed") = 1, py::arg("threads") = 1,
          "Selection frequencies over B half-sample fits.");
    m.def("tune_weights", &tune, py::arg("X"), py::arg("y"), py::arg("groups"), py::arg("alpha") = 0.95, py::arg("eta") = 0.5,
          py::arg("epsilon") = 0.05, py::arg("R") = 500, py::arg("max_iters") = 50, py::arg("seed") = 1, py::arg("threads") = 1);
    m.def("compare_ranks", &compare, py::arg("a"), py::arg("b"), py::arg("k_min") = 1, py::arg("k_max") = 0, py::arg("M") = 1000,
          py::arg("Z") = 1000, py::arg("seed") = 1, py::arg("threads") = 1);
    m.def("canberra", &canberra, py::arg("tau"), py::arg("sigma"), py::arg("k"), "Top-k distance between two full rank vectors (1-based).");
    m.def("bh_qvalues", &bh_qvalues, py::arg("pvalues"));
    m.def("simulate", &simulate, py::arg("study") = 1, py::arg("gamma") = 0.12, py::arg("replicate") = 0, py::arg("seed") = 1,
          py::arg("enriched") = true, "One replicate of a simulation study: raw counts, response, groups and the causal truth.");
}
