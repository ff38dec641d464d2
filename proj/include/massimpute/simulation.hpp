#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "massimpute/data_model.hpp"

namespace massimpute {

// Superpopulation models, with x ~ N(2, 1) and e ~ N(0, 1) independent:
//   I:   y = 1 + 2x + e
//   II:  y = 3 + x + 2e
//   III: y = 2.5 + 0.5x^2 + e
enum class PopulationModel { I, II, III };
std::string_view to_string(PopulationModel model);
PopulationModel parse_population_model(std::string_view name);

struct PopulationSpec {
  PopulationModel model = PopulationModel::I;
  std::size_t population_size = 100000;
  std::uint64_t seed = 1;
};

struct Population {
  Eigen::VectorXd x;
  Eigen::VectorXd y;

  std::size_t size() const noexcept { return static_cast<std::size_t>(x.size()); }
  double mean_y() const { return y.mean(); }
};

Population generate_population(const PopulationSpec& spec);

// Simple random sample without replacement; weights N/n. The returned sample
// also carries the population y as its response (the gold standard).
SurveySample draw_srs(const Population& population, std::size_t n, std::uint64_t seed);

// (n1, n2) = (round-half-even(0.7 n_B), n_B - n1).
std::pair<std::size_t, std::size_t> stratum_allocation(std::size_t n_b);

// Stratum 1 is {x <= 2}, stratum 2 is {x > 2}; independent SRS in each, then
// the stratum labels are dropped.
SurveySample draw_stratified_b(const Population& population, std::size_t n_b, std::uint64_t seed);

struct SimConfig {
  PopulationModel model = PopulationModel::I;
  std::size_t population_size = 100000;
  std::size_t n_a = 500;
  std::size_t n_b = 500;
  std::size_t reps = 1000;
  // 0 disables the bootstrap variance column.
  std::size_t bootstrap_L = 500;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;

  void validate() const;
};

struct RepResult {
  bool ok = false;
  std::string failure;
  double theta_a = 0.0;
  double theta_b = 0.0;
  double theta_i = 0.0;
  double theta_ipw = 0.0;
  double v_a = 0.0;
  double v_b = 0.0;
  double v_lin = 0.0;
  double v_boot = 0.0;
};

struct EstimatorSummary {
  std::string name;
  double bias = 0.0;
  double mc_variance = 0.0;  // divisor: number of successful reps
  double mse = 0.0;
  double remse = 0.0;        // 100 * MSE / MSE(theta_A)
};

struct VarianceSummary {
  std::string name;
  double mean = 0.0;
  double relative_bias = 0.0;  // mean / MC variance of theta_I - 1
};

struct SimReport {
  SimConfig config;
  double theta_n = 0.0;
  std::vector<EstimatorSummary> estimators;   // A, B, I, IPW
  std::vector<VarianceSummary> variance_estimators;  // linearization[, bootstrap]
  std::size_t successful_reps = 0;
  std::size_t failures = 0;
  std::vector<std::string> failure_messages;
  std::vector<RepResult> per_rep;
  double wall_clock_seconds = 0.0;

  const EstimatorSummary& estimator(std::string_view name) const;
  const VarianceSummary& variance_estimator(std::string_view name) const;
};

// One population per (model, seed); reps redraw A and B from it. Each rep's
// randomness comes from a seed derived from (master_seed, rep), so results do
// not depend on the thread count.
SimReport run_monte_carlo(const SimConfig& config);

}  // namespace massimpute
