#include "commands.hpp"

#include <pathsgl/data_model.hpp>
#include <pathsgl/parallel.hpp>
#include <pathsgl/penalty.hpp>
#include <pathsgl/rank_compare.hpp>
#include <pathsgl/serialize.hpp>
#include <pathsgl/sgl_solver.hpp>
#include <pathsgl/simulation.hpp>
#include <pathsgl/stability.hpp>
#include <pathsgl/weight_tuning.hpp>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;

namespace pathsgl::cli {

std::string sha256_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

namespace {

struct Common
{
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

struct DataArgs
{
    std::string genotypes, phenotype, pathways, snp_gene_map, weights;
};

struct Manifest
{
    std::string subcommand;
    Json config = Json::object();
    Json inputs = Json::object();
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void add_input(const std::string& label, const std::string& path)
    {
        if (path.empty()) return;
        inputs[label] = Json{{"path", path}, {"sha256", sha256_file(path)}};
    }

    void write(const fs::path& dir) const
    {
        Json j;
        j["subcommand"] = subcommand;
        j["version"] = kVersion;
        j["seed"] = seed;
        j["threads"] = threads;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        write_json(dir / "manifest.json", j);
    }
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--out", c.out_dir, "Output directory")->capture_default_str();
    app->add_option("--seed", c.seed, "Master seed")->capture_default_str();
    app->add_option("--threads", c.threads, "Worker threads (0: SGL_THREADS or all cores)")->capture_default_str();
}

void add_data(CLI::App* app, DataArgs& d, bool weights)
{
    app->add_option("--genotypes", d.genotypes, "Genotype TSV (samples x SNPs, counts 0/1/2)")->required();
    app->add_option("--phenotype", d.phenotype, "Phenotype TSV (sample_id, y, covariates...)")->required();
    app->add_option("--pathways", d.pathways, "Pathway GMT (pathway_id, genes...)")->required();
    app->add_option("--snp-gene-map", d.snp_gene_map, "SNP to gene TSV")->required();
    if (weights) app->add_option("--weights", d.weights, "Pathway weights TSV");
}

struct LoadedData
{
    StandardizedData data;
    PathwayMap map;
    std::vector<double> weights;
};

LoadedData load_data(const DataArgs& d, Manifest& m, std::ostream& err)
{
    m.add_input("genotypes", d.genotypes);
    m.add_input("phenotype", d.phenotype);
    m.add_input("pathways", d.pathways);
    m.add_input("snp_gene_map", d.snp_gene_map);
    m.add_input("weights", d.weights);
    const GenotypeMatrix g = load_genotypes(d.genotypes);
    const Phenotype ph = load_phenotype(d.phenotype);
    LoadedData out;
    out.data = standardize(g, ph);
    const PathwayMap full = load_pathway_annotation(d.pathways, d.snp_gene_map, g);
    out.map = drop_features(full, out.data.constant);
    require(out.map.n_pathways() > 0, ErrorCode::InvalidArgument, "no pathway has a usable feature");
    for (const auto& w : out.map.warnings) err << "warning: " << w << '\n';
    if (!d.weights.empty()) out.weights = load_weights(d.weights, out.map);
    return out;
}

fs::path prepare_out(const Common& c)
{
    fs::path dir(c.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorCode::Io, "cannot create output directory " + c.out_dir);
    return dir;
}

// ---- fit ----------------------------------------------------------------

struct FitArgs
{
    Common common;
    DataArgs data;
    double alpha = 0.95;
    double lambda_frac = 0.95;
    std::string algorithm = "cgd";
    SglConfig solver;
};

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err)
{
    Manifest m;
    m.subcommand = "fit";
    m.seed = a.common.seed;
    m.threads = resolve_threads(a.common.threads);
    m.config = Json{
        {"alpha", a.alpha},
        {"lambda_fraction", a.lambda_frac},
        {"algorithm", a.algorithm},
        {"tol", a.solver.tol},
        {"outer_tol", a.solver.outer_tol},
        {"max_inner_iters", a.solver.max_inner_iters},
        {"max_outer_iters", a.solver.max_outer_iters},
    };
    const Algorithm algo = parse_algorithm(a.algorithm);
    require(a.lambda_frac > 0.0, ErrorCode::InvalidArgument, "--lambda-frac must be positive");
    const fs::path dir = prepare_out(a.common);
    LoadedData d = load_data(a.data, m, err);

    SglConfig cfg = a.solver;
    cfg.alpha = a.alpha;
    cfg.weights = d.weights;
    cfg.threads = m.threads;
    cfg.validate(d.map.n_pathways());
    const double lmax = lambda_grid(d.data, d.map, a.alpha, d.weights, m.threads).lambda_max;
    cfg.lambda = a.lambda_frac * lmax;
    SglFit fit;
    if (cfg.lambda > 0.0) {
        fit = fit_sgl(d.data, d.map, cfg, algo);
    } else {
        fit.algorithm = algo;
        fit.alpha = a.alpha;
        fit.coefficients.resize(d.map.n_pathways());
        fit.objective = 0.5 * d.data.y.squaredNorm();
    }
    write_json(dir / "fit.json", fit_to_json(fit, d.map, lmax, a.lambda_frac));
    m.outputs = {"fit.json"};
    m.write(dir);
    out << "selected " << fit.selected_pathways.size() << " pathways, " << fit.selected_features.size() << " SNPs\n";
    if (!fit.converged) {
        err << "error: NonConvergence: " << fit.nonconverged_pathways.size() << " pathway fits hit the iteration cap\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

// ---- rank ---------------------------------------------------------------

struct RankArgs
{
    Common common;
    DataArgs data;
    double alpha = 0.95;
    double lambda_frac = 0.95;
    std::string algorithm = "cgd";
    std::size_t B = 1000;
    bool null = false;
    bool bias = false;
};

void write_rankings(const fs::path& dir, const std::string& prefix, const RankingResult& r, const PathwayMap& map, std::vector<std::string>& outputs)
{
    write_ranking_tsv(dir / (prefix + "pathways.tsv"), ranked_items(r, map, RankLevel::Pathway), false);
    write_ranking_tsv(dir / (prefix + "snps.tsv"), ranked_items(r, map, RankLevel::Feature), true);
    write_ranking_tsv(dir / (prefix + "genes.tsv"), ranked_items(r, map, RankLevel::Gene), false);
    write_json(dir / (prefix + "ranking.json"), ranking_to_json(r));
    for (const char* f : {"pathways.tsv", "snps.tsv", "genes.tsv", "ranking.json"}) outputs.push_back(prefix + f);
}

int cmd_rank(const RankArgs& a, std::ostream& out, std::ostream& err)
{
    Manifest m;
    m.subcommand = "rank";
    m.seed = a.common.seed;
    m.threads = resolve_threads(a.common.threads);
    m.config = Json{{"alpha", a.alpha}, {"lambda_fraction", a.lambda_frac}, {"algorithm", a.algorithm}, {"B", a.B}, {"null", a.null}, {"bias", a.bias}};
    RankingConfig rc;
    rc.alpha = a.alpha;
    rc.lambda_fraction = a.lambda_frac;
    rc.algorithm = parse_algorithm(a.algorithm);
    rc.subsamples = a.B;
    rc.seed = a.common.seed;
    rc.threads = m.threads;
    const fs::path dir = prepare_out(a.common);
    LoadedData d = load_data(a.data, m, err);
    rc.weights = d.weights;

    Index nonconverged = 0;
    if (a.bias) {
        const RankingResult emp = rank_by_stability(d.data, d.map, rc);
        const RankingResult nul = null_ranking(d.data, d.map, rc);
        write_rankings(dir, "", emp, d.map, m.outputs);
        write_rankings(dir, "null_", nul, d.map, m.outputs);
        write_json(dir / "bias.json", bias_to_json(bias_diagnostics(emp, nul)));
        m.outputs.push_back("bias.json");
        nonconverged = emp.nonconverged + nul.nonconverged;
    } else {
        const RankingResult r = a.null ? null_ranking(d.data, d.map, rc) : rank_by_stability(d.data, d.map, rc);
        write_rankings(dir, a.null ? "null_" : "", r, d.map, m.outputs);
        nonconverged = r.nonconverged;
    }
    m.write(dir);
    out << "ranked " << d.map.n_pathways() << " pathways over " << a.B << " subsamples\n";
    if (nonconverged > 0) {
        err << "error: NonConvergence: " << nonconverged << " subsample fits hit the iteration cap\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

// ---- tune-weights -------------------------------------------------------

struct TuneArgs
{
    Common common;
    DataArgs data;
    TuneOptions opts;
};

int cmd_tune(const TuneArgs& a, std::ostream& out, std::ostream& err)
{
    Manifest m;
    m.subcommand = "tune-weights";
    m.seed = a.common.seed;
    m.threads = resolve_threads(a.common.threads);
    TuneOptions opts = a.opts;
    opts.seed = a.common.seed;
    opts.threads = m.threads;
    m.config = Json{{"alpha", opts.alpha}, {"eta", opts.eta}, {"epsilon", opts.epsilon}, {"R", opts.permutations}, {"max_iters", opts.max_iters}};
    const fs::path dir = prepare_out(a.common);
    LoadedData d = load_data(a.data, m, err);
    const TuneResult r = tune_weights(d.data, d.map, opts, d.weights);
    write_weights(dir / "weights.tsv", r.weights, d.map);
    write_json(dir / "tune_trace.json", tune_to_json(r, d.map, opts));
    m.outputs = {"weights.tsv", "tune_trace.json"};
    m.write(dir);
    out << "tuning " << (r.converged ? "converged" : "stopped") << " after " << r.trace.size() << " iterations, sum|d| = "
        << r.trace[static_cast<std::size_t>(r.best_iteration)].total_deviation << '\n';
    if (!r.converged) {
        err << "error: NonConvergence: weight tuning did not reach epsilon; best iterate written\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

// ---- compare-ranks ------------------------------------------------------

struct CompareArgs
{
    Common common;
    std::string a, b;
    CompareOptions opts;
};

int cmd_compare(const CompareArgs& a, std::ostream& out, std::ostream&)
{
    Manifest m;
    m.subcommand = "compare-ranks";
    m.seed = a.common.seed;
    m.threads = resolve_threads(a.common.threads);
    CompareOptions opts = a.opts;
    opts.seed = a.common.seed;
    opts.threads = m.threads;
    m.config = Json{{"k_min", opts.k_min}, {"k_max", opts.k_max}, {"M", opts.expected_pairs}, {"Z", opts.permutations}, {"consensus_k", opts.consensus_k}};
    m.add_input("a", a.a);
    m.add_input("b", a.b);
    const fs::path dir = prepare_out(a.common);
    const auto la = load_ranked_list(a.a);
    const auto lb = load_ranked_list(a.b);
    const RankComparison c = compare_rankings(la, lb, opts);
    write_json(dir / "comparison.json", comparison_to_json(c));
    {
        std::ofstream tsv(dir / "comparison.tsv");
        require(static_cast<bool>(tsv), ErrorCode::Io, "cannot write comparison.tsv");
        tsv << "k\tca\texpected\tca_star\tp\tq\n";
        char buf[256];
        for (std::size_t i = 0; i < c.k.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu\t%.10g\t%.10g\t%.10g\t%.6g\t%.6g\n", c.k[i], c.ca[i], c.expected[i], c.ca_star[i], c.p_value[i], c.q_value[i]);
            tsv << buf;
        }
    }
    m.outputs = {"comparison.json", "comparison.tsv"};
    m.write(dir);
    out << "argmin k = " << c.argmin_k << ", consensus size " << c.consensus.size() << '\n';
    return kExitOk;
}

// ---- simulate -----------------------------------------------------------

struct SimulateArgs
{
    Common common;
    int study = 1;
    std::string config;
    std::vector<double> gammas;
    std::size_t replicates = 0;
    std::string placement;
    bool emit_dataset = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err)
{
    Manifest m;
    m.subcommand = "simulate";
    m.seed = a.common.seed;
    m.threads = resolve_threads(a.common.threads);
    StudyConfig cfg = StudyConfig::defaults(a.study);
    if (!a.config.empty()) {
        m.add_input("config", a.config);
        Json j = read_json(a.config);
        if (!j.contains("study")) j["study"] = a.study;
        cfg = study_config_from_json(j);
    }
    if (!a.gammas.empty()) cfg.gammas = a.gammas;
    if (a.replicates > 0) cfg.replicates = a.replicates;
    if (!a.placement.empty()) {
        require(a.placement == "enriched" || a.placement == "random", ErrorCode::InvalidArgument, "--placement must be enriched or random");
        cfg.enriched = a.placement == "enriched";
    }
    cfg.seed = a.common.seed;
    cfg.threads = m.threads;
    cfg.validate();
    m.config = study_config_to_json(cfg);
    const fs::path dir = prepare_out(a.common);

    if (a.emit_dataset) {
        const StudyDataset ds = make_study_dataset(cfg, cfg.gammas.front(), 0);
        write_genotypes(dir / "genotypes.tsv", ds.genotypes.genotype);
        Phenotype ph;
        ph.samples = ds.genotypes.genotype.samples;
        ph.y = ds.effect.y;
        write_phenotype(dir / "phenotype.tsv", ph);
        write_gmt(dir / "pathways.gmt", ds.map);
        write_snp_gene_map(dir / "snp_gene.tsv", ds.map);
        Json truth;
        truth["gamma"] = cfg.gammas.front();
        truth["delta"] = ds.effect.delta;
        Json cf = Json::array(), cp = Json::array();
        for (Index j : ds.causal.features) cf.push_back(ds.map.feature_ids[j]);
        for (Index l : ds.causal.pathways) cp.push_back(ds.map.pathways[l].id);
        truth["causal_features"] = cf;
        truth["causal_pathways"] = cp;
        write_json(dir / "truth.json", truth);
        m.outputs = {"genotypes.tsv", "phenotype.tsv", "pathways.gmt", "snp_gene.tsv", "truth.json"};
        m.write(dir);
        out << "wrote dataset for replicate 0 at gamma " << cfg.gammas.front() << '\n';
        return kExitOk;
    }

    const StudyReport report = run_study(cfg);
    write_study_tsv(dir / "study.tsv", report);
    write_json(dir / "study.json", study_to_json(report));
    m.outputs = {"study.tsv", "study.json"};
    m.write(dir);
    for (const auto& s : report.summaries) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "gamma=%.3g %-6s snp_power=%.3f pathway_power=%.3f pathways=%.2f snps=%.2f\n", s.gamma, s.method.c_str(),
                      s.mean_feature_power, s.mean_pathway_power, s.mean_pathways, s.mean_features);
        out << buf;
    }
    for (const auto& f : report.failures) err << "warning: " << f << '\n';
    Index nonconverged = 0;
    for (const auto& s : report.summaries) nonconverged += s.nonconverged;
    if (nonconverged > 0) {
        err << "error: NonConvergence: " << nonconverged << " replicate fits hit the iteration cap\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Pathway-driven sparse group lasso: fitting, stability ranking, weight tuning and simulation"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the sparse group lasso at a fraction of lambda_max");
    add_data(fit_cmd, fit.data, true);
    add_common(fit_cmd, fit.common);
    fit_cmd->add_option("--alpha", fit.alpha, "L1 mixing parameter in [0, 1]")->capture_default_str();
    fit_cmd->add_option("--lambda-frac", fit.lambda_frac, "lambda as a fraction of lambda_max")->capture_default_str();
    fit_cmd->add_option("--algorithm", fit.algorithm, "cgd or bcgd")->capture_default_str();
    fit_cmd->add_option("--tol", fit.solver.tol, "Inner convergence: max coefficient change")->capture_default_str();
    fit_cmd->add_option("--outer-tol", fit.solver.outer_tol, "BCGD convergence: max coefficient change per sweep")->capture_default_str();
    fit_cmd->add_option("--max-inner-iters", fit.solver.max_inner_iters, "Inner sweep cap")->capture_default_str();
    fit_cmd->add_option("--max-outer-iters", fit.solver.max_outer_iters, "BCGD sweep cap")->capture_default_str();

    RankArgs rank;
    auto* rank_cmd = app.add_subcommand("rank", "Rank pathways, SNPs and genes by selection frequency over half-samples");
    add_data(rank_cmd, rank.data, true);
    add_common(rank_cmd, rank.common);
    rank_cmd->add_option("--alpha", rank.alpha, "L1 mixing parameter")->capture_default_str();
    rank_cmd->add_option("--lambda-frac", rank.lambda_frac, "lambda as a fraction of each subsample's lambda_max")->capture_default_str();
    rank_cmd->add_option("--algorithm", rank.algorithm, "cgd or bcgd")->capture_default_str();
    rank_cmd->add_option("--B", rank.B, "Number of half-sample fits")->capture_default_str();
    rank_cmd->add_flag("--null", rank.null, "Permute the phenotype within each subsample");
    rank_cmd->add_flag("--bias", rank.bias, "Run both rankings and write correlation diagnostics");

    TuneArgs tune;
    auto* tune_cmd = app.add_subcommand("tune-weights", "Tune pathway weights for uniform first-selection under the null");
    add_data(tune_cmd, tune.data, true);
    add_common(tune_cmd, tune.common);
    tune_cmd->add_option("--alpha", tune.opts.alpha, "L1 mixing parameter")->capture_default_str();
    tune_cmd->add_option("--eta", tune.opts.eta, "Largest downward step factor, in (0, 1)")->capture_default_str();
    tune_cmd->add_option("--epsilon", tune.opts.epsilon, "Stop when sum |d_l| falls below this")->capture_default_str();
    tune_cmd->add_option("--R", tune.opts.permutations, "Permutations per iteration")->capture_default_str();
    tune_cmd->add_option("--max-iters", tune.opts.max_iters, "Iteration cap")->capture_default_str();

    CompareArgs cmp;
    auto* cmp_cmd = app.add_subcommand("compare-ranks", "Compare two ranked lists with the top-k Canberra distance");
    cmp_cmd->add_option("a", cmp.a, "First ranked list")->required();
    cmp_cmd->add_option("b", cmp.b, "Second ranked list")->required();
    add_common(cmp_cmd, cmp.common);
    cmp_cmd->add_option("--k-min", cmp.opts.k_min, "Smallest k")->capture_default_str();
    cmp_cmd->add_option("--k-max", cmp.opts.k_max, "Largest k (0: min list length)")->capture_default_str();
    cmp_cmd->add_option("--Z", cmp.opts.permutations, "Permutations for p-values")->capture_default_str();
    cmp_cmd->add_option("--M", cmp.opts.expected_pairs, "Random pairs for the expected distance")->capture_default_str();
    cmp_cmd->add_option("--consensus-k", cmp.opts.consensus_k, "k for the consensus table (0: argmin k)")->capture_default_str();

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Run simulation study 1 or 2");
    add_common(sim_cmd, sim.common);
    sim_cmd->add_option("--study", sim.study, "1 (SGL vs lasso) or 2 (BCGD vs CGD)")->capture_default_str();
    sim_cmd->add_option("--config", sim.config, "Study config JSON");
    sim_cmd->add_option("--gamma", sim.gammas, "Effect sizes (repeatable)");
    sim_cmd->add_option("--replicates", sim.replicates, "Replicates per effect size");
    sim_cmd->add_option("--placement", sim.placement, "Study 1 causal placement: enriched or random");
    sim_cmd->add_flag("--emit-dataset", sim.emit_dataset, "Write replicate 0's dataset instead of running the study");

    auto* version_cmd = app.add_subcommand("version", "Print the version");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }

    try {
        if (version_cmd->parsed()) {
            out << "pathsgl " << kVersion << '\n';
            return kExitOk;
        }
        if (fit_cmd->parsed()) return cmd_fit(fit, out, err);
        if (rank_cmd->parsed()) return cmd_rank(rank, out, err);
        if (tune_cmd->parsed()) return cmd_tune(tune, out, err);
        if (cmp_cmd->parsed()) return cmd_compare(cmp, out, err);
        if (sim_cmd->parsed()) return cmd_simulate(sim, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace pathsgl::cli
