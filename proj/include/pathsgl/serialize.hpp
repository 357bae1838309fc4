#pragma once
#include <filesystem>
#include <vector>
#include <json.hpp>
#include <pathsgl/data_model.hpp>
#include <pathsgl/rank_compare.hpp>
#include <pathsgl/sgl_solver.hpp>
#include <pathsgl/simulation.hpp>
#include <pathsgl/stability.hpp>
#include <pathsgl/weight_tuning.hpp>

namespace pathsgl {

using Json = nlohmann::ordered_json;

Json fit_to_json(const SglFit& fit, const PathwayMap& map, double lambda_max, double lambda_fraction);

/// TSV with header `pathway_id  weight`. Rows may come in any order but must cover every pathway.
std::vector<double> load_weights(const std::filesystem::path& path, const PathwayMap& map);
void write_weights(const std::filesystem::path& path, const std::vector<double>& weights, const PathwayMap& map);

Json tune_to_json(const TuneResult& result, const PathwayMap& map, const TuneOptions& opts);

Json ranking_to_json(const RankingResult& result);
Json bias_to_json(const BiasReport& report);
Json comparison_to_json(const RankComparison& cmp);

Json study_config_to_json(const StudyConfig& config);
/// Missing keys keep the study's defaults.
StudyConfig study_config_from_json(const Json& j);
Json study_to_json(const StudyReport& report);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

} // namespace pathsgl
