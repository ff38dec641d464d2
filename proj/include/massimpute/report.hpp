#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "massimpute/csv.hpp"
#include "massimpute/estimators.hpp"
#include "massimpute/mean_model.hpp"
#include "massimpute/simulation.hpp"

namespace massimpute {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolName = "massimpute";
inline constexpr std::string_view kToolVersion = MASSIMPUTE_VERSION;

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// {tool, version, seed, inputs: [{path, sha256}]}. Paths are recorded as
// given so identical invocations produce identical bytes.
Json artifact_meta(std::uint64_t seed, const std::vector<std::filesystem::path>& inputs);

Json to_json(const CovariateDecl& decl);
CovariateDecl covariate_decl_from_json(const Json& j);

Json to_json(const FittedModel& model);
FittedModel fitted_model_from_json(const Json& j);

// Variance block: method, components, standard error and the normal-theory
// interval theta +/- 1.96 * sqrt(v_total).
Json variance_json(const VarianceRecord& variance, double theta_hat);
Json to_json(const EstimateReport& report);

Json to_json(const SimConfig& config);
// Wall-clock time is left out unless asked for; it is the only field that
// varies between identical runs.
Json to_json(const SimReport& report, bool include_timing = false);
csv::Table per_rep_table(const SimReport& report);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace massimpute
