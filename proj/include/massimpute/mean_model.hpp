#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "massimpute/data_model.hpp"

namespace massimpute {

// Mean function m(x; beta) of the study variable given covariates.
//   Linear:    x'beta
//   Logistic:  1 / (1 + exp(-x'beta))
//   LogLinear: exp(x'beta)
enum class ModelFamily { Linear, Logistic, LogLinear };

std::string_view to_string(ModelFamily family);
ModelFamily parse_family(std::string_view name);

// Linear predictors beyond this magnitude are clamped before exponentiation.
inline constexpr double kExpArgumentLimit = 700.0;

struct MeanEvaluation {
  double value = 0.0;
  bool saturated = false;
};

MeanEvaluation evaluate_mean(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& beta);
double mean_value(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& beta);

// d m(x; beta) / d beta.
Eigen::VectorXd mean_gradient(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& beta);

// Row-wise m(x_i; beta) over a design matrix.
Eigen::VectorXd mean_values(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& beta);

// Scalar factor d_i with mdot(x_i; beta) = d_i * x_i (1, m(1-m) or m).
Eigen::VectorXd gradient_scale(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& means);

struct SolverConfig {
  double tolerance = 1e-10;  // on the sup-norm of the estimating function
  int max_iterations = 100;
  int max_halvings = 20;
  double divergence_bound = 1e4;
  double pinned_tolerance = 1e-8;
};

struct FittedModel {
  ModelFamily family = ModelFamily::Linear;
  Eigen::VectorXd beta_hat;
  int iterations = 0;
  double final_score_norm = 0.0;
  // Design column names in coefficient order, "(Intercept)" first if present.
  std::vector<std::string> covariate_names;
  // h(x; beta) = x, which makes the estimating equations the GLM score.
  std::string h_choice = "canonical";

  // How to rebuild the design on another sample.
  bool intercept = true;
  std::vector<std::string> requested_covariates;
  std::vector<CovariateDecl> encoding;
  std::optional<std::string> response_name;
  std::size_t n_train = 0;
};

// U(beta) = n^-1 sum_i {y_i - m(x_i; beta)} x_i.
Eigen::VectorXd quasi_score(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& beta);
Eigen::VectorXd quasi_score(ModelFamily family, const SurveySample& sample_b, const DesignMatrix& design,
                            const Eigen::Ref<const Eigen::VectorXd>& beta);

struct Coefficients {
  Eigen::VectorXd beta;
  int iterations = 0;
  double score_norm = 0.0;
};

// Solves U(beta) = 0. Linear: least squares through a pivoted QR of X, with
// residual refinement until the score tolerance holds. Otherwise Newton from
// beta = 0 with the analytic Jacobian and step halving on ||U||_2.
Coefficients solve_quasi_score(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y, const SolverConfig& config = {});

FittedModel fit_model(ModelFamily family, const SurveySample& sample_b, const DesignMatrix& design,
                      const SolverConfig& config = {});

// Convenience: builds the design from the sample and fits.
FittedModel fit_model(ModelFamily family, const SurveySample& sample_b, const std::vector<std::string>& covariates,
                      bool intercept, const SolverConfig& config = {});

// Design matrix for `sample` laid out the way the model was fitted.
DesignMatrix model_design(const FittedModel& model, const SurveySample& sample);

// Mass imputation: yhat_i = m(x_i; beta_hat) for every row.
Eigen::VectorXd predict_all(const FittedModel& model, const DesignMatrix& design_a);

}  // namespace massimpute
