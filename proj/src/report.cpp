#include "massimpute/report.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "massimpute/errors.hpp"

namespace massimpute {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorKind::IOFailure, "sha256 computation failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IOFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

Json artifact_meta(std::uint64_t seed, const std::vector<std::filesystem::path>& inputs) {
  Json meta;
  meta["tool"] = kToolName;
  meta["version"] = kToolVersion;
  meta["seed"] = seed;
  Json list = Json::array();
  for (const auto& p : inputs) list.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  meta["inputs"] = std::move(list);
  return meta;
}

Json to_json(const CovariateDecl& decl) {
  Json j;
  j["name"] = decl.name;
  j["categorical"] = decl.categorical;
  if (decl.categorical) {
    j["reference_level"] = decl.reference_level;
    j["levels"] = decl.levels;
  }
  return j;
}

CovariateDecl covariate_decl_from_json(const Json& j) {
  CovariateDecl decl;
  decl.name = j.at("name").get<std::string>();
  decl.categorical = j.value("categorical", false);
  if (decl.categorical) {
    decl.reference_level = j.at("reference_level").get<std::string>();
    decl.levels = j.value("levels", std::vector<std::string>{});
  }
  return decl;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const FittedModel& model) {
  Json j;
  j["kind"] = "fitted_model";
  j["family"] = to_string(model.family);
  j["covariate_names"] = model.covariate_names;
  j["beta_hat"] = to_vector(model.beta_hat);
  j["h_choice"] = model.h_choice;
  j["convergence"] = {{"iterations", model.iterations}, {"final_score_norm", model.final_score_norm}};
  j["intercept"] = model.intercept;
  j["requested_covariates"] = model.requested_covariates;
  Json enc = Json::array();
  for (const auto& d : model.encoding) enc.push_back(to_json(d));
  j["encoding"] = std::move(enc);
  j["response_name"] = model.response_name ? Json(*model.response_name) : Json(nullptr);
  j["n_train"] = model.n_train;
  return j;
}

FittedModel fitted_model_from_json(const Json& j) {
  try {
    FittedModel model;
    model.family = parse_family(j.at("family").get<std::string>());
    model.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
    model.beta_hat = to_eigen(j.at("beta_hat").get<std::vector<double>>());
    model.h_choice = j.value("h_choice", std::string("canonical"));
    if (j.contains("convergence")) {
      model.iterations = j["convergence"].value("iterations", 0);
      model.final_score_norm = j["convergence"].value("final_score_norm", 0.0);
    }
    model.intercept = j.value("intercept", true);
    if (j.contains("requested_covariates")) {
      model.requested_covariates = j["requested_covariates"].get<std::vector<std::string>>();
    } else {
      for (const auto& n : model.covariate_names) {
        if (n != kInterceptName) model.requested_covariates.push_back(n);
      }
    }
    if (j.contains("encoding")) {
      for (const auto& d : j["encoding"]) model.encoding.push_back(covariate_decl_from_json(d));
    }
    if (j.contains("response_name") && !j["response_name"].is_null()) {
      model.response_name = j["response_name"].get<std::string>();
    }
    model.n_train = j.value("n_train", std::size_t{0});
    if (static_cast<std::size_t>(model.beta_hat.size()) != model.covariate_names.size()) {
      throw Error(ErrorKind::DimensionMismatch, "beta_hat and covariate_names differ in length");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed model file: ") + e.what());
  }
}

Json variance_json(const VarianceRecord& variance, double theta_hat) {
  Json j;
  j["method"] = to_string(variance.method);
  if (variance.v_a) j["v_a"] = *variance.v_a;
  if (variance.v_b) j["v_b"] = *variance.v_b;
  j["v_total"] = variance.v_total;
  if (variance.strategy_a) j["strategy_a"] = to_string(*variance.strategy_a);
  if (variance.replicates) j["replicates"] = *variance.replicates;
  if (variance.v_a_negative) j["v_a_negative"] = true;
  const double se = variance.v_total >= 0.0 ? std::sqrt(variance.v_total) : std::nan("");
  j["standard_error"] = number_or_null(se);
  j["ci95_normal"] = {{"lower", number_or_null(theta_hat - 1.96 * se)},
                      {"upper", number_or_null(theta_hat + 1.96 * se)},
                      {"note", "convenience interval theta_hat +/- 1.96 * sqrt(v_total)"}};
  return j;
}

Json to_json(const EstimateReport& report) {
  Json j;
  j["kind"] = "estimate";
  j["estimator"] = to_string(report.estimator_kind);
  j["theta_hat"] = report.theta_hat;
  j["n_a"] = report.n_a;
  j["n_b"] = report.n_b;
  j["population_size_used"] = report.population_size_used;
  if (report.variance) j["variance"] = variance_json(*report.variance, report.theta_hat);
  return j;
}

Json to_json(const SimConfig& config) {
  return {{"model", to_string(config.model)},   {"population_size", config.population_size},
          {"n_a", config.n_a},                  {"n_b", config.n_b},
          {"reps", config.reps},                {"bootstrap_L", config.bootstrap_L},
          {"master_seed", config.master_seed}};
}

Json to_json(const SimReport& report, bool include_timing) {
  Json j;
  j["kind"] = "simulation_report";
  j["config"] = to_json(report.config);
  j["theta_N"] = report.theta_n;
  Json est;
  for (const auto& e : report.estimators) {
    est[e.name] = {{"bias", e.bias}, {"mc_variance", e.mc_variance}, {"mse", e.mse}, {"remse", e.remse}};
  }
  j["estimators"] = std::move(est);
  Json var;
  for (const auto& v : report.variance_estimators) {
    var[v.name] = {{"mean", v.mean}, {"relative_bias", v.relative_bias}};
  }
  j["variance_estimators"] = std::move(var);
  j["successful_reps"] = report.successful_reps;
  j["failures"] = report.failures;
  j["failure_messages"] = report.failure_messages;
  if (include_timing) j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j;
}

csv::Table per_rep_table(const SimReport& report) {
  csv::Table t;
  t.header = {"rep", "status", "theta_a", "theta_b", "theta_i", "theta_ipw", "v_a", "v_b", "v_lin", "v_boot"};
  for (std::size_t r = 0; r < report.per_rep.size(); ++r) {
    const auto& p = report.per_rep[r];
    t.rows.push_back({std::to_string(r + 1), p.ok ? "ok" : "failed", csv::format_double(p.theta_a),
                      csv::format_double(p.theta_b), csv::format_double(p.theta_i), csv::format_double(p.theta_ipw),
                      csv::format_double(p.v_a), csv::format_double(p.v_b), csv::format_double(p.v_lin),
                      csv::format_double(p.v_boot)});
  }
  return t;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IOFailure, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IOFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::IOFailure, "write failed for " + path.string());
}

}  // namespace massimpute
