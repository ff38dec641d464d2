#include "massimpute/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "massimpute/bootstrap.hpp"
#include "massimpute/data_model.hpp"
#include "massimpute/errors.hpp"
#include "massimpute/estimators.hpp"
#include "massimpute/mean_model.hpp"
#include "massimpute/report.hpp"
#include "massimpute/simulation.hpp"
#include "massimpute/variance.hpp"

namespace massimpute::cli {

namespace {

// Raised for inconsistent flags that CLI11 itself cannot detect.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<CovariateDecl> covariate_decls(const RunConfig& cfg) {
  std::vector<CovariateDecl> decls;
  for (const auto& name : cfg.covariates) decls.push_back({name, false, {}, {}});
  for (const auto& spec : cfg.categorical) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw UsageError("--categorical expects column=reference_level, got '" + spec + "'");
    }
    const std::string column = spec.substr(0, eq);
    auto it = std::find_if(decls.begin(), decls.end(), [&](const CovariateDecl& d) { return d.name == column; });
    if (it == decls.end()) throw UsageError("categorical column '" + column + "' is not listed in --covariates");
    it->categorical = true;
    it->reference_level = spec.substr(eq + 1);
  }
  return decls;
}

std::optional<double> parse_pop_size(const std::string& text) {
  if (text.empty() || text == "estimate") return std::nullopt;
  auto v = csv::parse_double(text);
  if (!v || !(*v > 0.0)) throw UsageError("--pop-size must be a positive number or 'estimate'");
  return v;
}

DesignSpec parse_design(const RunConfig& cfg, std::optional<double> N) {
  if (cfg.design.empty() || cfg.design == "ppswr") return DesignSpec::ppswr(N);
  if (cfg.design == "srs") {
    if (!N) throw UsageError("--design srs needs a numeric --pop-size");
    return DesignSpec::srs(*N);
  }
  if (cfg.design == "joint") {
    if (cfg.joint_probs.empty()) throw UsageError("--design joint needs --joint-probs");
    const csv::Table t = csv::read(cfg.joint_probs);
    Eigen::MatrixXd pi(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      for (std::size_t j = 0; j < t.header.size(); ++j) {
        auto v = csv::parse_double(t.rows[i][j]);
        if (!v) {
          throw Error(ErrorKind::NonNumericValue,
                      cfg.joint_probs + ": row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1));
        }
        pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
      }
    }
    return DesignSpec::joint(std::move(pi), N);
  }
  throw UsageError("unknown --design '" + cfg.design + "' (srs, ppswr, joint)");
}

std::optional<VarianceStrategyA> parse_strategy(const std::string& text) {
  if (text.empty()) return std::nullopt;
  if (text == "exact") return VarianceStrategyA::ExactJoint;
  if (text == "ppswr") return VarianceStrategyA::PPSWRApprox;
  throw UsageError("unknown --strategy '" + text + "' (exact, ppswr)");
}

SampleSchema model_schema(const FittedModel& model) {
  SampleSchema schema;
  schema.covariates = model.encoding;
  if (schema.covariates.empty()) {
    for (const auto& n : model.requested_covariates) schema.covariates.push_back({n, false, {}, {}});
  }
  return schema;
}

SurveySample load_sample_a(const std::string& path, const FittedModel& model, const std::string& weight) {
  SampleSchema schema = model_schema(model);
  schema.weight = weight;
  return load_sample(path, schema, SampleKind::ProbabilityA);
}

SurveySample load_sample_b(const std::string& path, const FittedModel& model, const std::string& response) {
  SampleSchema schema = model_schema(model);
  schema.response = response;
  return load_sample(path, schema, SampleKind::NonProbabilityB);
}

std::string weight_or_default(const RunConfig& cfg) { return cfg.weight.empty() ? "w" : cfg.weight; }

FittedModel fit_from_flags(const RunConfig& cfg) {
  if (cfg.response.empty()) throw UsageError("--response is required to fit a model");
  if (cfg.covariates.empty() && cfg.no_intercept) throw UsageError("an empty design has nothing to fit");
  SampleSchema schema;
  schema.covariates = covariate_decls(cfg);
  schema.response = cfg.response;
  const SurveySample b = load_sample(cfg.train, schema, SampleKind::NonProbabilityB);
  std::vector<std::string> names;
  for (const auto& d : schema.covariates) names.push_back(d.name);
  return fit_model(parse_family(cfg.family), b, names, !cfg.no_intercept);
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  const FittedModel model = fit_from_flags(cfg);
  Json j = to_json(model);
  j["meta"] = artifact_meta(cfg.seed, {cfg.train});
  write_json_file(cfg.out, j);
  out << "fitted " << to_string(model.family) << " model in " << model.iterations << " iteration(s); wrote "
      << cfg.out << "\n";
  return kExitOk;
}

int cmd_impute(const RunConfig& cfg, std::ostream& out) {
  const FittedModel model = fitted_model_from_json(read_json_file(cfg.model));
  const std::string weight = weight_or_default(cfg);
  const SurveySample a = load_sample_a(cfg.sample_a, model, weight);
  const Eigen::VectorXd yhat = predict_all(model, model_design(model, a));

  csv::Table table = sample_table(a);
  if (table.find("yhat")) throw Error(ErrorKind::InvalidArgument, "sample A already has a 'yhat' column");
  table.header.emplace_back("yhat");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    table.rows[i].push_back(csv::format_double(yhat(static_cast<Eigen::Index>(i))));
  }
  csv::write(cfg.out, table);

  Json manifest;
  manifest["kind"] = "imputed_sample";
  manifest["weight_column"] = weight;
  manifest["model"] = to_json(model);
  manifest["meta"] = artifact_meta(cfg.seed, {cfg.model, cfg.sample_a});
  write_json_file(manifest_path(cfg.out), manifest);
  out << "imputed " << a.size() << " rows; wrote " << cfg.out << "\n";
  return kExitOk;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  const std::optional<double> N_flag = parse_pop_size(cfg.pop_size);

  std::optional<Json> sidecar;
  if (std::filesystem::exists(manifest_path(cfg.imputed))) sidecar = read_json_file(manifest_path(cfg.imputed));
  std::string weight = cfg.weight;
  if (weight.empty()) weight = sidecar ? sidecar->value("weight_column", std::string("w")) : std::string("w");

  std::vector<std::filesystem::path> inputs{cfg.imputed};
  const csv::Table table = csv::read(cfg.imputed);

  EstimateReport report;
  report.estimator_kind = EstimatorKind::MassImputation;

  if (cfg.variance == "bootstrap") {
    if (!cfg.train.empty()) throw UsageError("--variance bootstrap works from the release file alone; drop --train");
    const AugmentedDataset data = read_augmented_dataset(table, weight);
    if (data.L == 0) throw Error(ErrorKind::MissingColumn, "w_rep_1 (no replicate columns in the release file)");
    if (cfg.L != 0 && cfg.L != data.L) {
      throw UsageError("--L " + std::to_string(cfg.L) + " does not match the " + std::to_string(data.L) +
                       " replicates in " + cfg.imputed);
    }
    const double N = N_flag.value_or(data.weights.sum());
    report.population_size_used = N;
    report.theta_hat = ht_mean(data.imputations, data.weights, N);
    report.n_a = static_cast<std::size_t>(data.weights.size());
    const Eigen::VectorXd reps = replicate_estimates(data.replicate_weights, data.replicate_imputations, N);
    VarianceRecord rec;
    rec.method = VarianceMethod::Bootstrap;
    rec.v_total = bootstrap_variance(report.theta_hat, reps);
    rec.replicates = data.L;
    report.variance = rec;
  } else if (cfg.variance == "linearized" || cfg.variance == "none") {
    if (cfg.L != 0) throw UsageError("--L only applies to --variance bootstrap");
    const AugmentedDataset data = read_augmented_dataset(table, weight);
    const double N = N_flag.value_or(data.weights.sum());
    report.population_size_used = N;
    report.theta_hat = ht_mean(data.imputations, data.weights, N);
    report.n_a = static_cast<std::size_t>(data.weights.size());

    if (cfg.variance == "linearized") {
      if (cfg.train.empty()) throw UsageError("--variance linearized requires --train");
      FittedModel model;
      if (!cfg.model.empty()) {
        model = fitted_model_from_json(read_json_file(cfg.model));
        inputs.emplace_back(cfg.model);
      } else if (sidecar && sidecar->contains("model")) {
        model = fitted_model_from_json((*sidecar)["model"]);
      } else {
        throw UsageError("--variance linearized needs --model or the imputed file's manifest");
      }
      const std::string response = !cfg.response.empty() ? cfg.response : model.response_name.value_or("");
      if (response.empty()) throw UsageError("cannot tell which column of --train is the response; pass --response");
      inputs.emplace_back(cfg.train);

      SampleSchema schema_a = model_schema(model);
      schema_a.weight = weight;
      const SurveySample a = load_sample(table, schema_a, SampleKind::ProbabilityA);
      const SurveySample b = load_sample_b(cfg.train, model, response);
      const DesignSpec design = parse_design(cfg, N_flag);
      if (cfg.design == "joint") inputs.emplace_back(cfg.joint_probs);
      design.validate(a.size());
      const LinearizationComponents lin =
          linearized_variance(model, a, b, design, parse_strategy(cfg.strategy), N);
      report.n_b = b.size();
      report.variance = lin.record();
    }
  } else {
    throw UsageError("unknown --variance '" + cfg.variance + "' (linearized, bootstrap, none)");
  }

  Json j = to_json(report);
  j["meta"] = artifact_meta(cfg.seed, inputs);
  write_json_file(cfg.report, j);
  out << "theta_hat = " << csv::format_double(report.theta_hat);
  if (report.variance) out << ", variance = " << csv::format_double(report.variance->v_total);
  out << "; wrote " << cfg.report << "\n";
  return kExitOk;
}

Json invocation_json(const RunConfig& cfg) {
  Json j;
  j["train"] = cfg.train;
  j["sample_a"] = cfg.sample_a;
  j["model"] = cfg.model;
  j["response"] = cfg.response;
  j["covariates"] = cfg.covariates;
  j["categorical"] = cfg.categorical;
  j["family"] = cfg.family;
  j["no_intercept"] = cfg.no_intercept;
  j["weight"] = weight_or_default(cfg);
  j["design"] = cfg.design;
  j["pop_size"] = cfg.pop_size;
  j["joint_probs"] = cfg.joint_probs;
  j["L"] = cfg.L;
  j["seed"] = cfg.seed;
  return j;
}

RunConfig replay_config(const RunConfig& cfg) {
  const Json manifest = read_json_file(cfg.replay);
  if (!manifest.contains("provenance") || !manifest["provenance"].contains("invocation")) {
    throw Error(ErrorKind::InvalidArgument, cfg.replay + " carries no invocation record");
  }
  const Json& inv = manifest["provenance"]["invocation"];
  RunConfig r = cfg;
  r.train = inv.value("train", std::string());
  r.sample_a = inv.value("sample_a", std::string());
  r.model = inv.value("model", std::string());
  r.response = inv.value("response", std::string());
  r.covariates = inv.value("covariates", std::vector<std::string>{});
  r.categorical = inv.value("categorical", std::vector<std::string>{});
  r.family = inv.value("family", std::string("linear"));
  r.no_intercept = inv.value("no_intercept", false);
  r.weight = inv.value("weight", std::string("w"));
  r.design = inv.value("design", std::string());
  r.pop_size = inv.value("pop_size", std::string("estimate"));
  r.joint_probs = inv.value("joint_probs", std::string());
  r.L = inv.value("L", std::size_t{0});
  r.seed = inv.value("seed", std::uint64_t{1});

  for (const auto& input : manifest["provenance"]["meta"]["inputs"]) {
    const std::string path = input.at("path").get<std::string>();
    if (sha256_file(path) != input.at("sha256").get<std::string>()) {
      throw Error(ErrorKind::InvalidArgument, "input " + path + " changed since the manifest was written");
    }
  }
  return r;
}

int cmd_bootstrap(const RunConfig& given, std::ostream& out) {
  const RunConfig cfg = given.replay.empty() ? given : replay_config(given);
  if (cfg.train.empty() || cfg.sample_a.empty()) throw UsageError("bootstrap needs --train and --sample-a");
  if (cfg.L == 0) throw UsageError("--L must be at least 1");

  std::vector<std::filesystem::path> inputs{cfg.train, cfg.sample_a};
  FittedModel model;
  std::string response = cfg.response;
  if (!cfg.model.empty()) {
    model = fitted_model_from_json(read_json_file(cfg.model));
    inputs.emplace_back(cfg.model);
    if (response.empty()) response = model.response_name.value_or("");
    if (response.empty()) throw UsageError("pass --response; the model file does not name it");
  } else {
    model = fit_from_flags(cfg);
  }
  const std::string weight = weight_or_default(cfg);
  const SurveySample b = load_sample_b(cfg.train, model, response);
  const SurveySample a = load_sample_a(cfg.sample_a, model, weight);

  const std::optional<double> N_flag = parse_pop_size(cfg.pop_size);
  const DesignSpec design = parse_design(cfg, N_flag);
  if (cfg.design == "joint") inputs.emplace_back(cfg.joint_probs);

  BootstrapOptions options;
  options.threads = cfg.threads;
  const ReplicateSet reps = build_replicates(model, a, b, design, cfg.L, cfg.seed, options);

  Json provenance;
  provenance["meta"] = artifact_meta(cfg.seed, inputs);
  provenance["invocation"] = invocation_json(cfg);
  write_augmented_dataset(a, reps, model, cfg.out, provenance);

  const double N = N_flag.value_or(estimate_population_size(a));
  const double theta = ht_mean(reps.base_imputations, reps.base_weights, N);
  const double v = bootstrap_variance(theta, replicate_estimates(reps.replicate_weights, reps.replicate_imputations, N));
  out << "theta_hat = " << csv::format_double(theta) << ", bootstrap variance = " << csv::format_double(v)
      << " (L = " << cfg.L << ", redraws = " << reps.redraws << "); wrote " << cfg.out << "\n";
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  SimConfig sim;
  sim.model = parse_population_model(cfg.population_model);
  sim.population_size = cfg.population_size;
  sim.n_a = cfg.n_a;
  sim.n_b = cfg.n_b;
  sim.reps = cfg.reps;
  sim.bootstrap_L = cfg.boot_l;
  sim.master_seed = cfg.seed;
  sim.threads = cfg.threads;
  const SimReport report = run_monte_carlo(sim);

  Json j = to_json(report, cfg.timing);
  j["meta"] = artifact_meta(cfg.seed, {});
  write_json_file(cfg.report, j);
  if (!cfg.per_rep.empty()) csv::write(cfg.per_rep, per_rep_table(report));

  const auto& I = report.estimator("I");
  out << "model " << to_string(sim.model) << ": theta_N = " << report.theta_n << ", theta_I bias = " << I.bias
      << ", ReMSE = " << I.remse << ", failures = " << report.failures << "; wrote " << cfg.report << "\n";
  return kExitOk;
}

void emit_error(std::ostream& err, int code, std::string_view kind, std::string_view message) {
  Json j;
  j["error"] = {{"exit_code", code}, {"kind", kind}, {"message", message}};
  err << j.dump() << "\n";
}

void add_seed(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Master seed (recorded in every output)")
      ->envname("MASSIMPUTE_SEED")
      ->capture_default_str();
}

void add_threads(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--threads", cfg.threads, "Worker threads; output does not depend on this")
      ->envname("MASSIMPUTE_THREADS")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();
}

void add_fit_flags(CLI::App* sub, RunConfig& cfg, bool required) {
  auto* response = sub->add_option("--response", cfg.response, "Response column of the training sample");
  auto* covs = sub->add_option("--covariates", cfg.covariates, "Comma-separated covariate columns")->delimiter(',');
  if (required) {
    response->required();
    covs->required();
  }
  sub->add_option("--categorical", cfg.categorical, "column=reference_level for a categorical covariate")
      ->delimiter(',');
  sub->add_option("--family", cfg.family, "linear | logistic | loglinear")->capture_default_str();
  sub->add_flag("--no-intercept", cfg.no_intercept, "Omit the intercept column");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Mass imputation estimates of finite-population means from a non-probability sample "
               "and a probability sample",
               "massimpute"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "TOML/INI file with the same keys as the flags");
  app.require_subcommand(1, 1);

  auto* fit = app.add_subcommand("fit", "Fit the mean model on the non-probability sample");
  fit->add_option("--train", cfg.train, "Sample B CSV")->required()->check(CLI::ExistingFile);
  add_fit_flags(fit, cfg, true);
  fit->add_option("--out", cfg.out, "Model JSON to write")->required();
  add_seed(fit, cfg);

  auto* impute = app.add_subcommand("impute", "Mass-impute the probability sample");
  impute->add_option("--model", cfg.model, "Model JSON from `fit`")->required()->check(CLI::ExistingFile);
  impute->add_option("--sample-a", cfg.sample_a, "Sample A CSV")->required()->check(CLI::ExistingFile);
  impute->add_option("--weight", cfg.weight, "Design weight column (default w)");
  impute->add_option("--out", cfg.out, "Imputed CSV to write")->required();
  add_seed(impute, cfg);

  auto* estimate = app.add_subcommand("estimate", "Point estimate and variance from an imputed or release file");
  estimate->add_option("--imputed", cfg.imputed, "Imputed or augmented CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--weight", cfg.weight, "Design weight column (default from manifest, else w)");
  estimate->add_option("--pop-size", cfg.pop_size, "Population size N, or 'estimate' for the sum of weights")
      ->capture_default_str();
  estimate->add_option("--variance", cfg.variance, "linearized | bootstrap | none")->capture_default_str();
  estimate->add_option("--train", cfg.train, "Sample B CSV (linearized variance)")->check(CLI::ExistingFile);
  estimate->add_option("--model", cfg.model, "Model JSON (defaults to the imputed file's manifest)")
      ->check(CLI::ExistingFile);
  estimate->add_option("--response", cfg.response, "Response column of --train (defaults to the model's)");
  estimate->add_option("--design", cfg.design, "srs | ppswr | joint (default ppswr)");
  estimate->add_option("--joint-probs", cfg.joint_probs, "n_A x n_A CSV of joint inclusion probabilities")
      ->check(CLI::ExistingFile);
  estimate->add_option("--strategy", cfg.strategy, "exact | ppswr (default: exact when the design allows)");
  estimate->add_option("--L", cfg.L, "Expected replicate count of the release file (bootstrap variance)");
  estimate->add_option("--report", cfg.report, "Report JSON to write")->required();
  add_seed(estimate, cfg);

  auto* boot = app.add_subcommand("bootstrap", "Build replicate weights and imputations and write the release file");
  boot->add_option("--train", cfg.train, "Sample B CSV")->check(CLI::ExistingFile);
  boot->add_option("--sample-a", cfg.sample_a, "Sample A CSV")->check(CLI::ExistingFile);
  boot->add_option("--model", cfg.model, "Model JSON; otherwise fitted from --response/--covariates")
      ->check(CLI::ExistingFile);
  add_fit_flags(boot, cfg, false);
  boot->add_option("--weight", cfg.weight, "Design weight column (default w)");
  boot->add_option("--design", cfg.design, "srs | ppswr (default ppswr)");
  boot->add_option("--pop-size", cfg.pop_size, "Population size N, or 'estimate'")->capture_default_str();
  boot->add_option("--L", cfg.L, "Number of bootstrap replicates");
  boot->add_option("--replay", cfg.replay, "Regenerate from a release manifest")->check(CLI::ExistingFile);
  boot->add_option("--out", cfg.out, "Augmented CSV to write")->required();
  add_seed(boot, cfg);
  add_threads(boot, cfg);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo study over the I/II/III populations");
  sim->add_option("--model", cfg.population_model, "I | II | III")->required();
  sim->add_option("--n-a", cfg.n_a, "Size of the SRS sample A")->capture_default_str();
  sim->add_option("--n-b", cfg.n_b, "Size of the stratified sample B")->capture_default_str();
  sim->add_option("--reps", cfg.reps, "Monte Carlo repetitions")->capture_default_str();
  sim->add_option("--boot-l", cfg.boot_l, "Bootstrap replicates per rep (0 disables)")->capture_default_str();
  sim->add_option("--pop-size", cfg.population_size, "Finite population size")->capture_default_str();
  sim->add_option("--report", cfg.report, "Report JSON to write")->required();
  sim->add_option("--per-rep", cfg.per_rep, "Optional CSV of per-rep estimates");
  sim->add_flag("--timing", cfg.timing, "Include wall-clock time in the report");
  add_seed(sim, cfg);
  add_threads(sim, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    emit_error(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(cfg, out);
    if (impute->parsed()) return cmd_impute(cfg, out);
    if (estimate->parsed()) return cmd_estimate(cfg, out);
    if (boot->parsed()) return cmd_bootstrap(cfg, out);
    if (sim->parsed()) return cmd_simulate(cfg, out);
  } catch (const UsageError& e) {
    emit_error(err, kExitUsage, "usage", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    int code = kExitData;
    if (e.category() == ErrorCategory::Usage) code = kExitUsage;
    if (e.category() == ErrorCategory::Numerical) code = kExitNumerical;
    emit_error(err, code, to_string(e.kind()), e.detail());
    return code;
  }
  emit_error(err, kExitUsage, "usage", "no subcommand");
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("massimpute");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace massimpute::cli
