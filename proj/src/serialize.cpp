#include <pathsgl/serialize.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pathsgl {

namespace {

Json number_or_null(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

Json vec(const Vector& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

} // namespace

Json fit_to_json(const SglFit& fit, const PathwayMap& map, double lambda_max, double lambda_fraction)
{
    Json j;
    j["algorithm"] = to_string(fit.algorithm);
    j["alpha"] = fit.alpha;
    j["lambda"] = fit.lambda;
    j["lambda_max"] = lambda_max;
    j["lambda_fraction"] = lambda_fraction;
    j["objective"] = fit.objective;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    Json nc = Json::array();
    for (Index l : fit.nonconverged_pathways) nc.push_back(map.pathways[l].id);
    j["nonconverged_pathways"] = nc;
    Json paths = Json::array();
    for (Index l : fit.selected_pathways) {
        Json p;
        p["id"] = map.pathways[l].id;
        Json coefs = Json::array();
        const auto& c = fit.coefficients[l];
        for (std::size_t k = 0; k < c.features.size(); ++k)
            coefs.push_back(Json{{"feature", map.feature_ids[c.features[k]]}, {"beta", c.values[k]}});
        p["coefficients"] = coefs;
        paths.push_back(p);
    }
    j["selected_pathways"] = paths;
    Json feats = Json::array();
    for (Index f : fit.selected_features) feats.push_back(map.feature_ids[f]);
    j["selected_features"] = feats;
    return j;
}

std::vector<double> load_weights(const std::filesystem::path& path, const PathwayMap& map)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    std::unordered_map<std::string, Index> index;
    for (Index l = 0; l < map.n_pathways(); ++l) index.emplace(map.pathways[l].id, l);
    std::vector<double> w(map.n_pathways(), std::numeric_limits<double>::quiet_NaN());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string id, value;
        if (!(ss >> id)) continue;
        require(static_cast<bool>(ss >> value), ErrorCode::RaggedRow, path.string() + ":" + std::to_string(lineno) + ": missing weight");
        if (lineno == 1 && id == "pathway_id") continue;
        auto it = index.find(id);
        if (it == index.end()) continue; // pathway dropped from this map
        double v = 0.0;
        try {
            v = std::stod(value);
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineno) + ": bad weight '" + value + "'");
        }
        require(v > 0.0 && std::isfinite(v), ErrorCode::InvalidArgument, "weights must be positive and finite");
        w[it->second] = v;
    }
    for (Index l = 0; l < w.size(); ++l)
        require(!std::isnan(w[l]), ErrorCode::InvalidArgument, "no weight given for pathway '" + map.pathways[l].id + "'");
    return w;
}

void write_weights(const std::filesystem::path& path, const std::vector<double>& weights, const PathwayMap& map)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
    out << "pathway_id\tweight\n";
    out.precision(17);
    for (Index l = 0; l < map.n_pathways(); ++l) out << map.pathways[l].id << '\t' << weights[l] << '\n';
}

Json tune_to_json(const TuneResult& result, const PathwayMap& map, const TuneOptions& opts)
{
    Json j;
    j["alpha"] = opts.alpha;
    j["eta"] = opts.eta;
    j["epsilon"] = opts.epsilon;
    j["permutations"] = opts.permutations;
    j["max_iters"] = opts.max_iters;
    j["seed"] = opts.seed;
    j["converged"] = result.converged;
    j["best_iteration"] = result.best_iteration;
    Json ids = Json::array();
    for (const auto& p : map.pathways) ids.push_back(p.id);
    j["pathways"] = ids;
    j["weights"] = result.weights;
    Json trace = Json::array();
    for (const auto& it : result.trace) {
        trace.push_back(Json{
            {"iteration", it.iteration},
            {"total_deviation", it.total_deviation},
            {"weights", it.weights},
            {"selection", vec(it.selection)},
        });
    }
    j["trace"] = trace;
    return j;
}

Json ranking_to_json(const RankingResult& r)
{
    Json j;
    j["null"] = r.null;
    j["subsamples"] = r.subsamples;
    j["algorithm"] = to_string(r.config.algorithm);
    j["alpha"] = r.config.alpha;
    j["lambda_fraction"] = r.config.lambda_fraction;
    j["seed"] = r.config.seed;
    j["mean_pathways"] = r.mean_pathways;
    j["sd_pathways"] = r.sd_pathways;
    j["mean_features"] = r.mean_features;
    j["sd_features"] = r.sd_features;
    j["nonconverged"] = r.nonconverged;
    return j;
}

namespace {

Json corr(const Correlation& c)
{
    return Json{{"r", number_or_null(c.r)}, {"p_value", number_or_null(c.p_value)}, {"n", c.n}, {"defined", c.defined}};
}

} // namespace

Json bias_to_json(const BiasReport& report)
{
    return Json{{"pathways", corr(report.pathways)}, {"features", corr(report.features)}};
}

Json comparison_to_json(const RankComparison& c)
{
    Json j;
    j["size_a"] = c.size_a;
    j["size_b"] = c.size_b;
    j["union"] = c.p_star;
    j["intersection"] = c.intersection;
    j["argmin_k"] = c.argmin_k;
    Json per_k = Json::array();
    for (std::size_t i = 0; i < c.k.size(); ++i) {
        per_k.push_back(Json{
            {"k", c.k[i]},
            {"ca", c.ca[i]},
            {"expected", c.expected[i]},
            {"ca_star", c.ca_star[i]},
            {"p", c.p_value[i]},
            {"q", c.q_value[i]},
        });
    }
    j["per_k"] = per_k;
    j["consensus_k"] = c.consensus_k;
    Json cons = Json::array();
    for (const auto& m : c.consensus)
        cons.push_back(Json{{"id", c.universe[m.index]}, {"rank_a", m.tau}, {"rank_b", m.sigma}, {"mean_rank", m.mean}});
    j["consensus"] = cons;
    j["mean_rank_intersection_empty"] = c.mean_ranks.empty_intersection;
    Json mr = Json::array();
    for (const auto& m : c.mean_ranks.entries)
        mr.push_back(Json{{"id", c.universe[m.index]}, {"rank_a", m.tau}, {"rank_b", m.sigma}, {"mean_rank", m.mean}});
    j["mean_ranks"] = mr;
    return j;
}

Json study_config_to_json(const StudyConfig& c)
{
    Json j;
    j["study"] = c.study;
    j["N"] = c.n;
    j["P"] = c.p;
    j["L"] = c.n_pathways;
    j["pathway_size"] = c.pathway_size;
    j["overlap"] = c.overlap;
    j["gene_size"] = c.gene_size;
    j["n_causal"] = c.n_causal;
    j["enriched"] = c.enriched;
    j["gammas"] = c.gammas;
    j["replicates"] = c.replicates;
    j["lambda_fraction"] = c.lambda_fraction;
    j["alpha"] = c.alpha;
    j["maf_low"] = c.maf_low;
    j["maf_high"] = c.maf_high;
    j["y_mean"] = c.y_mean;
    j["y_sd"] = c.y_sd;
    j["seed"] = c.seed;
    return j;
}

StudyConfig study_config_from_json(const Json& j)
{
    require(j.is_object(), ErrorCode::InvalidArgument, "study config must be a JSON object");
    static const std::set<std::string> known{"study", "N", "P", "L", "pathway_size", "overlap", "gene_size", "n_causal", "enriched",
                                             "gammas", "replicates", "lambda_fraction", "alpha", "maf_low", "maf_high", "y_mean",
                                             "y_sd", "seed"};
    for (const auto& item : j.items())
        require(known.count(item.key()) > 0, ErrorCode::InvalidArgument, "unknown study config key: " + item.key());
    try {
        StudyConfig c = StudyConfig::defaults(j.value("study", 1));
        c.n = j.value("N", c.n);
        c.n_pathways = j.value("L", c.n_pathways);
        c.pathway_size = j.value("pathway_size", c.pathway_size);
        c.overlap = j.value("overlap", c.overlap);
        c.p = c.study == 2 ? c.n_pathways * (c.pathway_size - c.overlap) + c.overlap : c.p;
        c.p = j.value("P", c.p);
        c.gene_size = j.value("gene_size", c.gene_size);
        c.n_causal = j.value("n_causal", c.n_causal);
        c.enriched = j.value("enriched", c.enriched);
        c.gammas = j.value("gammas", c.gammas);
        c.replicates = j.value("replicates", c.replicates);
        c.lambda_fraction = j.value("lambda_fraction", c.lambda_fraction);
        c.alpha = j.value("alpha", c.alpha);
        c.maf_low = j.value("maf_low", c.maf_low);
        c.maf_high = j.value("maf_high", c.maf_high);
        c.y_mean = j.value("y_mean", c.y_mean);
        c.y_sd = j.value("y_sd", c.y_sd);
        c.seed = j.value("seed", c.seed);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad study config: ") + e.what());
    }
}

Json study_to_json(const StudyReport& report)
{
    Json j;
    j["config"] = study_config_to_json(report.config);
    Json sums = Json::array();
    for (const auto& s : report.summaries) {
        sums.push_back(Json{
            {"gamma", s.gamma},
            {"method", s.method},
            {"replicates", s.replicates},
            {"mean_pathway_power", s.mean_pathway_power},
            {"mean_pathway_fpr", s.mean_pathway_fpr},
            {"mean_feature_power", s.mean_feature_power},
            {"mean_feature_fpr", s.mean_feature_fpr},
            {"mean_selected_pathways", s.mean_pathways},
            {"mean_selected_features", s.mean_features},
            {"power_histogram", s.power_histogram},
            {"nonconverged", s.nonconverged},
            {"inexact_matches", s.inexact_matches},
        });
    }
    j["summaries"] = sums;
    j["failures"] = report.failures;
    return j;
}

void write_json(const std::filesystem::path& path, const Json& j)
{
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
}

} // namespace pathsgl
