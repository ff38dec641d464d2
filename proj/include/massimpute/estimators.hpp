#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "massimpute/data_model.hpp"
#include "massimpute/mean_model.hpp"

namespace massimpute {

enum class EstimatorKind { HT, MassImputation, NaiveB, IPW };
std::string_view to_string(EstimatorKind kind);

enum class VarianceStrategyA { ExactJoint, PPSWRApprox };
std::string_view to_string(VarianceStrategyA strategy);

enum class VarianceMethod { Linearized, Bootstrap };
std::string_view to_string(VarianceMethod method);

// Variance attached to a point estimate. Linearized records carry the two
// components; bootstrap records carry the replicate count.
struct VarianceRecord {
  VarianceMethod method = VarianceMethod::Linearized;
  double v_total = 0.0;
  std::optional<double> v_a;
  std::optional<double> v_b;
  std::optional<VarianceStrategyA> strategy_a;
  std::optional<std::size_t> replicates;
  bool v_a_negative = false;
};

struct EstimateReport {
  double theta_hat = 0.0;
  EstimatorKind estimator_kind = EstimatorKind::MassImputation;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double population_size_used = 0.0;
  std::optional<VarianceRecord> variance;
};

// Logistic propensity model pi(x; phi) for membership in sample B.
struct PropensityModel {
  Eigen::VectorXd phi_hat;
  double score_norm = 0.0;
  int iterations = 0;
  std::vector<std::string> covariate_names;
};

// N^-1 sum_i w_i v_i.
double ht_mean(const Eigen::Ref<const Eigen::VectorXd>& values, const Eigen::Ref<const Eigen::VectorXd>& weights,
               double population_size);

// theta_I = N^-1 sum_{i in A} w_i m(x_i; beta_hat). N defaults to sum w_i.
EstimateReport mass_imputation_estimate(const FittedModel& model, const SurveySample& sample_a,
                                        std::optional<double> population_size = std::nullopt);

EstimateReport naive_mean(const SurveySample& sample_b);

// Tolerance applied to the (unscaled) propensity score equations.
inline constexpr double kPropensityTolerance = 1e-8;

// Solves sum_{B} x_i - sum_{A} w_i pi(x_i; phi) x_i = 0 by Newton's method.
// With an intercept column, the start is the constant propensity n_B / N-hat.
PropensityModel fit_propensity(const Eigen::Ref<const Eigen::MatrixXd>& design_a,
                               const Eigen::Ref<const Eigen::VectorXd>& weights_a,
                               const Eigen::Ref<const Eigen::MatrixXd>& design_b,
                               SolverConfig config = {.tolerance = kPropensityTolerance});
PropensityModel fit_propensity(const SurveySample& sample_a, const DesignMatrix& design_a, const DesignMatrix& design_b,
                               SolverConfig config = {.tolerance = kPropensityTolerance});

Eigen::VectorXd propensities(const PropensityModel& model, const Eigen::Ref<const Eigen::MatrixXd>& design);

// theta_IPW = N^-1 sum_{B} y_i / pi_hat_i.
double ipw_mean(const Eigen::Ref<const Eigen::VectorXd>& pi_hat, const Eigen::Ref<const Eigen::VectorXd>& y,
                double population_size);
EstimateReport ipw_estimate(const PropensityModel& propensity, const SurveySample& sample_b,
                            const DesignMatrix& design_b, double population_size);

}  // namespace massimpute
