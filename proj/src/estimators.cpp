#include "massimpute/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "massimpute/errors.hpp"

namespace massimpute {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::HT: return "HT";
    case EstimatorKind::MassImputation: return "MassImputation";
    case EstimatorKind::NaiveB: return "NaiveB";
    case EstimatorKind::IPW: return "IPW";
  }
  return "Unknown";
}

std::string_view to_string(VarianceStrategyA strategy) {
  switch (strategy) {
    case VarianceStrategyA::ExactJoint: return "ExactJoint";
    case VarianceStrategyA::PPSWRApprox: return "PPSWRApprox";
  }
  return "Unknown";
}

std::string_view to_string(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::Linearized: return "linearized";
    case VarianceMethod::Bootstrap: return "bootstrap";
  }
  return "unknown";
}

double ht_mean(const Eigen::Ref<const Eigen::VectorXd>& values, const Eigen::Ref<const Eigen::VectorXd>& weights,
               double population_size) {
  if (values.size() != weights.size()) {
    throw Error(ErrorKind::DimensionMismatch, "values and weights differ in length");
  }
  if (!(population_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  return values.dot(weights) / population_size;
}

EstimateReport mass_imputation_estimate(const FittedModel& model, const SurveySample& sample_a,
                                        std::optional<double> population_size) {
  if (sample_a.kind() != SampleKind::ProbabilityA) {
    throw Error(ErrorKind::InvalidArgument, "mass imputation needs a probability sample");
  }
  const DesignMatrix design = model_design(model, sample_a);
  const Eigen::VectorXd yhat = predict_all(model, design);
  EstimateReport report;
  report.estimator_kind = EstimatorKind::MassImputation;
  report.population_size_used = population_size.value_or(estimate_population_size(sample_a));
  report.theta_hat = ht_mean(yhat, sample_a.weights(), report.population_size_used);
  report.n_a = sample_a.size();
  report.n_b = model.n_train;
  return report;
}

EstimateReport naive_mean(const SurveySample& sample_b) {
  const auto& y = sample_b.response();
  if (y.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty sample");
  EstimateReport report;
  report.estimator_kind = EstimatorKind::NaiveB;
  report.theta_hat = y.mean();
  report.n_b = sample_b.size();
  return report;
}

namespace {

Eigen::VectorXd logistic(const Eigen::VectorXd& eta) {
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = std::clamp(eta(i), -kExpArgumentLimit, kExpArgumentLimit);
    out(i) = 1.0 / (1.0 + std::exp(-e));
  }
  return out;
}

bool has_intercept_column(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  return X.cols() > 0 && (X.col(0).array() == 1.0).all();
}

}  // namespace

PropensityModel fit_propensity(const Eigen::Ref<const Eigen::MatrixXd>& design_a,
                               const Eigen::Ref<const Eigen::VectorXd>& weights_a,
                               const Eigen::Ref<const Eigen::MatrixXd>& design_b, SolverConfig config) {
  if (design_a.cols() != design_b.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "samples A and B have different covariate sets");
  }
  if (design_a.rows() != weights_a.size()) throw Error(ErrorKind::DimensionMismatch, "weights of sample A");
  const Eigen::Index p = design_a.cols();
  for (const auto* X : {&design_a, &design_b}) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(*X);
    if (X->rows() < p || qr.rank() < p) throw Error(ErrorKind::RankDeficient, "propensity design is rank deficient");
  }

  const Eigen::VectorXd total_b = design_b.colwise().sum().transpose();
  const double n_b = static_cast<double>(design_b.rows());
  const double n_hat = weights_a.sum();

  PropensityModel model;
  model.phi_hat = Eigen::VectorXd::Zero(p);
  if (has_intercept_column(design_a) && n_b < n_hat) model.phi_hat(0) = std::log(n_b / (n_hat - n_b));

  auto score_at = [&](const Eigen::VectorXd& phi, Eigen::VectorXd& pi) {
    pi = logistic(design_a * phi);
    return Eigen::VectorXd(total_b - design_a.transpose() * weights_a.cwiseProduct(pi));
  };

  Eigen::VectorXd pi;
  Eigen::VectorXd score = score_at(model.phi_hat, pi);
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    model.iterations = iter;
    model.score_norm = score.lpNorm<Eigen::Infinity>();
    if (model.score_norm <= config.tolerance) return model;

    const Eigen::VectorXd d = weights_a.cwiseProduct((pi.array() * (1.0 - pi.array())).matrix());
    const Eigen::MatrixXd info = design_a.transpose() * d.asDiagonal() * design_a;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const Eigen::VectorXd step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      throw Error(ErrorKind::NoConvergence, "propensity Jacobian is singular");
    }
    const double current = score.norm();
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h, scale *= 0.5) {
      Eigen::VectorXd candidate = model.phi_hat + scale * step;
      Eigen::VectorXd cand_pi;
      Eigen::VectorXd cand_score = score_at(candidate, cand_pi);
      if (cand_score.allFinite() && cand_score.norm() < current) {
        model.phi_hat = std::move(candidate);
        pi = std::move(cand_pi);
        score = std::move(cand_score);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorKind::NoConvergence,
                  "propensity score stalled at ||U||_inf = " + std::to_string(model.score_norm));
    }
  }
  model.score_norm = score.lpNorm<Eigen::Infinity>();
  if (model.score_norm <= config.tolerance) return model;
  throw Error(ErrorKind::NoConvergence, "propensity fit did not converge in " +
                                            std::to_string(config.max_iterations) + " iterations");
}

PropensityModel fit_propensity(const SurveySample& sample_a, const DesignMatrix& design_a, const DesignMatrix& design_b,
                               SolverConfig config) {
  if (design_a.column_names != design_b.column_names) {
    throw Error(ErrorKind::ColumnMismatch, "samples A and B must share the propensity covariates");
  }
  PropensityModel model = fit_propensity(design_a.values, sample_a.weights(), design_b.values, config);
  model.covariate_names = design_a.column_names;
  return model;
}

Eigen::VectorXd propensities(const PropensityModel& model, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (design.cols() != model.phi_hat.size()) throw Error(ErrorKind::DimensionMismatch, "propensity design");
  return logistic(design * model.phi_hat);
}

double ipw_mean(const Eigen::Ref<const Eigen::VectorXd>& pi_hat, const Eigen::Ref<const Eigen::VectorXd>& y,
                double population_size) {
  if (pi_hat.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "propensities and responses");
  if (!(population_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  for (Eigen::Index i = 0; i < pi_hat.size(); ++i) {
    if (!(pi_hat(i) > 0.0)) throw Error(ErrorKind::ZeroPropensity, "row " + std::to_string(i + 1));
  }
  return (y.array() / pi_hat.array()).sum() / population_size;
}

EstimateReport ipw_estimate(const PropensityModel& propensity, const SurveySample& sample_b,
                            const DesignMatrix& design_b, double population_size) {
  if (!propensity.covariate_names.empty() && design_b.column_names != propensity.covariate_names) {
    throw Error(ErrorKind::ColumnMismatch, "sample B design does not match the propensity model");
  }
  EstimateReport report;
  report.estimator_kind = EstimatorKind::IPW;
  report.theta_hat = ipw_mean(propensities(propensity, design_b.values), sample_b.response(), population_size);
  report.n_b = sample_b.size();
  report.population_size_used = population_size;
  return report;
}

}  // namespace massimpute
