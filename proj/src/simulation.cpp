#include "massimpute/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "massimpute/bootstrap.hpp"
#include "massimpute/errors.hpp"
#include "massimpute/estimators.hpp"
#include "massimpute/mean_model.hpp"
#include "massimpute/parallel.hpp"
#include "massimpute/random.hpp"
#include "massimpute/variance.hpp"

namespace massimpute {

std::string_view to_string(PopulationModel model) {
  switch (model) {
    case PopulationModel::I: return "I";
    case PopulationModel::II: return "II";
    case PopulationModel::III: return "III";
  }
  return "?";
}

PopulationModel parse_population_model(std::string_view name) {
  if (name == "I" || name == "1") return PopulationModel::I;
  if (name == "II" || name == "2") return PopulationModel::II;
  if (name == "III" || name == "3") return PopulationModel::III;
  throw Error(ErrorKind::InvalidArgument, "unknown population model '" + std::string(name) + "'");
}

Population generate_population(const PopulationSpec& spec) {
  if (spec.population_size == 0) throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  const auto N = static_cast<Eigen::Index>(spec.population_size);
  rng::Generator gen(rng::derive_seed(spec.seed, rng::Stream::Population, 0));
  Population pop;
  pop.x.resize(N);
  pop.y.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    const double x = 2.0 + gen.normal();
    const double e = gen.normal();
    pop.x(i) = x;
    switch (spec.model) {
      case PopulationModel::I: pop.y(i) = 1.0 + 2.0 * x + e; break;
      case PopulationModel::II: pop.y(i) = 3.0 + x + 2.0 * e; break;
      case PopulationModel::III: pop.y(i) = 2.5 + 0.5 * x * x + e; break;
    }
  }
  return pop;
}

namespace {

// First n entries of a partial Fisher–Yates shuffle of `pool`, sorted.
std::vector<std::size_t> choose_without_replacement(std::vector<std::size_t> pool, std::size_t n,
                                                    rng::Generator& gen) {
  const std::size_t size = pool.size();
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t r = j + static_cast<std::size_t>(gen.below(size - j));
    std::swap(pool[j], pool[r]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Eigen::MatrixXd gather(const Eigen::VectorXd& v, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), 1);
  for (std::size_t k = 0; k < idx.size(); ++k) out(static_cast<Eigen::Index>(k), 0) = v(static_cast<Eigen::Index>(idx[k]));
  return out;
}

}  // namespace

SurveySample draw_srs(const Population& population, std::size_t n, std::uint64_t seed) {
  const std::size_t N = population.size();
  if (n > N) {
    throw Error(ErrorKind::SampleTooLarge, "n = " + std::to_string(n) + " exceeds N = " + std::to_string(N));
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "sample size must be positive");
  std::vector<std::size_t> pool(N);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  rng::Generator gen(seed);
  const auto idx = choose_without_replacement(std::move(pool), n, gen);

  const double w = static_cast<double>(N) / static_cast<double>(n);
  SurveySample a = SurveySample::probability({"x"}, gather(population.x, idx),
                                             Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), w), "w");
  return a.with_response(gather(population.y, idx).col(0), "y");
}

std::pair<std::size_t, std::size_t> stratum_allocation(std::size_t n_b) {
  const auto n1 = static_cast<std::size_t>(std::nearbyint(0.7 * static_cast<double>(n_b)));
  return {n1, n_b - n1};
}

SurveySample draw_stratified_b(const Population& population, std::size_t n_b, std::uint64_t seed) {
  std::vector<std::size_t> low, high;
  for (Eigen::Index i = 0; i < population.x.size(); ++i) {
    (population.x(i) <= 2.0 ? low : high).push_back(static_cast<std::size_t>(i));
  }
  const auto [n1, n2] = stratum_allocation(n_b);
  if (n1 > low.size() || n2 > high.size()) {
    throw Error(ErrorKind::StratumExhausted, "requested (" + std::to_string(n1) + ", " + std::to_string(n2) +
                                                 ") from strata of size (" + std::to_string(low.size()) + ", " +
                                                 std::to_string(high.size()) + ")");
  }
  rng::Generator gen(seed);
  auto idx = choose_without_replacement(std::move(low), n1, gen);
  auto idx2 = choose_without_replacement(std::move(high), n2, gen);
  idx.insert(idx.end(), idx2.begin(), idx2.end());
  return SurveySample::nonprobability({"x"}, gather(population.x, idx), gather(population.y, idx).col(0), "y");
}

void SimConfig::validate() const {
  if (reps == 0) throw Error(ErrorKind::InvalidArgument, "reps must be at least 1");
  if (n_a < 2 || n_b < 3) throw Error(ErrorKind::InvalidArgument, "sample sizes too small");
  if (n_a + n_b > population_size) throw Error(ErrorKind::InvalidArgument, "n_a + n_b exceeds N");
}

const EstimatorSummary& SimReport::estimator(std::string_view name) const {
  for (const auto& e : estimators) {
    if (e.name == name) return e;
  }
  throw Error(ErrorKind::InvalidArgument, "no estimator " + std::string(name));
}

const VarianceSummary& SimReport::variance_estimator(std::string_view name) const {
  for (const auto& v : variance_estimators) {
    if (v.name == name) return v;
  }
  throw Error(ErrorKind::InvalidArgument, "no variance estimator " + std::string(name));
}

namespace {

RepResult run_rep(const SimConfig& config, const Population& pop, std::size_t rep) {
  RepResult out;
  const double N = static_cast<double>(pop.size());
  const std::uint64_t rep_seed = rng::derive_seed(config.master_seed, rng::Stream::MonteCarloRep, rep);
  try {
    const SurveySample a = draw_srs(pop, config.n_a, rng::derive_seed(rep_seed, rng::Stream::SampleA, 0));
    const SurveySample b = draw_stratified_b(pop, config.n_b, rng::derive_seed(rep_seed, rng::Stream::SampleB, 0));
    out.theta_a = a.response().mean();
    out.theta_b = b.response().mean();

    const FittedModel model = fit_model(ModelFamily::Linear, b, {"x"}, true);
    const DesignMatrix xa = model_design(model, a);
    const DesignMatrix xb = model_design(model, b);
    const Eigen::VectorXd& w = a.weights();
    out.theta_i = ht_mean(predict_all(model, xa), w, N);

    const PropensityModel prop = fit_propensity(xa.values, w, xb.values);
    out.theta_ipw = ipw_mean(propensities(prop, xb.values), b.response(), N);

    const DesignSpec design = DesignSpec::srs(N);
    const LinearizationComponents lin =
        linearized_variance(model, xa, w, xb, b.response(), design, VarianceStrategyA::ExactJoint, N);
    out.v_a = lin.v_a;
    out.v_b = lin.v_b;
    out.v_lin = lin.v_total;

    if (config.bootstrap_L > 0) {
      const ReplicateSet reps =
          build_replicates(model, xa.values, w, xb.values, b.response(), design, config.bootstrap_L,
                           rng::derive_seed(rep_seed, rng::Stream::Bootstrap, 0));
      out.v_boot = bootstrap_variance(
          out.theta_i, replicate_estimates(reps.replicate_weights, reps.replicate_imputations, N));
    }
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.failure = "rep " + std::to_string(rep + 1) + ": " + e.what();
  }
  return out;
}

EstimatorSummary summarize(std::string name, const std::vector<double>& values, double truth) {
  EstimatorSummary s;
  s.name = std::move(name);
  const double R = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= R;
  double var = 0.0, mse = 0.0;
  for (double v : values) {
    var += (v - mean) * (v - mean);
    mse += (v - truth) * (v - truth);
  }
  s.bias = mean - truth;
  s.mc_variance = var / R;
  s.mse = mse / R;
  return s;
}

}  // namespace

SimReport run_monte_carlo(const SimConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  const Population pop = generate_population({config.model, config.population_size, config.master_seed});
  SimReport report;
  report.config = config;
  report.theta_n = pop.mean_y();
  report.per_rep.resize(config.reps);

  parallel_for(config.reps, config.threads,
               [&](std::size_t r) { report.per_rep[r] = run_rep(config, pop, r); });

  std::vector<double> ta, tb, ti, tipw, vlin, vboot;
  for (const auto& r : report.per_rep) {
    if (!r.ok) {
      ++report.failures;
      report.failure_messages.push_back(r.failure);
      continue;
    }
    ta.push_back(r.theta_a);
    tb.push_back(r.theta_b);
    ti.push_back(r.theta_i);
    tipw.push_back(r.theta_ipw);
    vlin.push_back(r.v_lin);
    vboot.push_back(r.v_boot);
  }
  report.successful_reps = ta.size();
  if (ta.empty()) throw Error(ErrorKind::NoConvergence, "every Monte Carlo rep failed");

  report.estimators = {summarize("A", ta, report.theta_n), summarize("B", tb, report.theta_n),
                       summarize("I", ti, report.theta_n), summarize("IPW", tipw, report.theta_n)};
  const double gold = report.estimators.front().mse;
  for (auto& e : report.estimators) e.remse = 100.0 * e.mse / gold;

  const double truth_var = report.estimator("I").mc_variance;
  auto summarize_variance = [&](std::string name, const std::vector<double>& v) {
    VarianceSummary s;
    s.name = std::move(name);
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    s.relative_bias = s.mean / truth_var - 1.0;
    return s;
  };
  report.variance_estimators.push_back(summarize_variance("linearization", vlin));
  if (config.bootstrap_L > 0) report.variance_estimators.push_back(summarize_variance("bootstrap", vboot));

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace massimpute
