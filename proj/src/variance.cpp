#include "massimpute/variance.hpp"

#include <variant>

#include "massimpute/errors.hpp"

namespace massimpute {

VarianceRecord LinearizationComponents::record() const {
  VarianceRecord rec;
  rec.method = VarianceMethod::Linearized;
  rec.v_a = v_a;
  rec.v_b = v_b;
  rec.v_total = v_total;
  rec.strategy_a = strategy_a;
  rec.v_a_negative = v_a_negative;
  return rec;
}

Eigen::VectorXd compute_c_hat(const FittedModel& model, const DesignMatrix& design_a,
                              const Eigen::Ref<const Eigen::VectorXd>& weights_a, const DesignMatrix& design_b) {
  const auto& X_a = design_a.values;
  const auto& X_b = design_b.values;
  if (X_a.cols() != model.beta_hat.size() || X_b.cols() != model.beta_hat.size()) {
    throw Error(ErrorKind::DimensionMismatch, "design width differs from the model");
  }
  if (X_a.rows() != weights_a.size()) throw Error(ErrorKind::DimensionMismatch, "weights of sample A");

  const Eigen::VectorXd d_b = gradient_scale(model.family, mean_values(model.family, X_b, model.beta_hat));
  const Eigen::VectorXd d_a = gradient_scale(model.family, mean_values(model.family, X_a, model.beta_hat));
  // mdot_i = d_i x_i and h_i = x_i.
  const Eigen::MatrixXd lhs = X_b.transpose() * d_b.asDiagonal() * X_b;
  const Eigen::VectorXd rhs = X_a.transpose() * weights_a.cwiseProduct(d_a);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  if (qr.rank() < lhs.cols()) throw Error(ErrorKind::SingularSystem, "c-hat system is singular");
  Eigen::VectorXd c = qr.solve(rhs);
  if (!c.allFinite()) throw Error(ErrorKind::SingularSystem, "c-hat system produced non-finite values");
  return c;
}

Eigen::VectorXd compute_c_hat(const FittedModel& model, const SurveySample& sample_a, const SurveySample& sample_b) {
  return compute_c_hat(model, model_design(model, sample_a), sample_a.weights(), model_design(model, sample_b));
}

double variance_component_b(const FittedModel& model, const DesignMatrix& design_b,
                            const Eigen::Ref<const Eigen::VectorXd>& y_b, const Eigen::Ref<const Eigen::VectorXd>& c_hat,
                            double population_size) {
  if (c_hat.size() != model.beta_hat.size()) throw Error(ErrorKind::DimensionMismatch, "c-hat length");
  if (!(population_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  const Eigen::VectorXd e = y_b - mean_values(model.family, design_b.values, model.beta_hat);
  const Eigen::VectorXd g = design_b.values * c_hat;
  return (e.array() * g.array()).square().sum() / (population_size * population_size);
}

double variance_component_b(const FittedModel& model, const SurveySample& sample_b,
                            const Eigen::Ref<const Eigen::VectorXd>& c_hat, double population_size) {
  return variance_component_b(model, model_design(model, sample_b), sample_b.response(), c_hat, population_size);
}

double ht_design_variance(const Eigen::Ref<const Eigen::VectorXd>& values, const Eigen::Ref<const Eigen::VectorXd>& weights,
                          const DesignSpec& design, VarianceStrategyA strategy, double population_size) {
  if (values.size() != weights.size()) throw Error(ErrorKind::DimensionMismatch, "values and weights");
  if (!(population_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  const auto n = static_cast<std::size_t>(values.size());
  const Eigen::VectorXd a = weights.cwiseProduct(values);
  const double scale = 1.0 / (population_size * population_size);

  if (strategy == VarianceStrategyA::PPSWRApprox) {
    if (n < 2) throw Error(ErrorKind::InvalidArgument, "PPSWR variance needs at least two units");
    const double nd = static_cast<double>(n);
    return scale * nd / (nd - 1.0) * (a.array() - a.mean()).square().sum();
  }

  if (!design.provides_joint_probabilities()) {
    throw Error(ErrorKind::MissingJointProbabilities, "ExactJoint needs joint inclusion probabilities");
  }
  design.validate(n);

  if (std::holds_alternative<SrsWithoutReplacement>(design.design)) {
    // Off-diagonal coefficients are all equal under SRS, so the double sum
    // collapses to sums and a sum of squares.
    const double pi = design.first_order(0, n);
    const double diag = 1.0 - pi;
    double total = diag * a.squaredNorm();
    if (n > 1) {
      const double pij = design.second_order(0, 1, n);
      const double off = (pij - pi * pi) / pij;
      const double sum = a.sum();
      total += off * (sum * sum - a.squaredNorm());
    }
    return scale * total;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pi_i = design.first_order(i, n);
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = design.second_order(i, j, n);
      const double pi_j = design.first_order(j, n);
      total += (pij - pi_i * pi_j) / pij * a(ii) * a(static_cast<Eigen::Index>(j));
    }
  }
  return scale * total;
}

double variance_component_a(const FittedModel& model, const SurveySample& sample_a, const DesignSpec& design,
                            VarianceStrategyA strategy, std::optional<double> population_size) {
  const double N = population_size ? *population_size
                                   : design.known_population_size().value_or(estimate_population_size(sample_a));
  const Eigen::VectorXd yhat = predict_all(model, model_design(model, sample_a));
  return ht_design_variance(yhat, sample_a.weights(), design, strategy, N);
}

VarianceStrategyA default_strategy(const DesignSpec& design) {
  return design.provides_joint_probabilities() ? VarianceStrategyA::ExactJoint : VarianceStrategyA::PPSWRApprox;
}

LinearizationComponents linearized_variance(const FittedModel& model, const DesignMatrix& design_a,
                                            const Eigen::Ref<const Eigen::VectorXd>& weights_a,
                                            const DesignMatrix& design_b, const Eigen::Ref<const Eigen::VectorXd>& y_b,
                                            const DesignSpec& design, VarianceStrategyA strategy,
                                            double population_size) {
  LinearizationComponents out;
  out.population_size = population_size;
  out.strategy_a = strategy;
  out.c_hat = compute_c_hat(model, design_a, weights_a, design_b);
  out.residuals = y_b - mean_values(model.family, design_b.values, model.beta_hat);
  const Eigen::VectorXd yhat = mean_values(model.family, design_a.values, model.beta_hat);
  out.v_a = ht_design_variance(yhat, weights_a, design, strategy, population_size);
  out.v_a_negative = out.v_a < 0.0;
  out.v_b = variance_component_b(model, design_b, y_b, out.c_hat, population_size);
  out.v_total = out.v_a + out.v_b;
  return out;
}

LinearizationComponents linearized_variance(const FittedModel& model, const SurveySample& sample_a,
                                            const SurveySample& sample_b, const DesignSpec& design,
                                            std::optional<VarianceStrategyA> strategy,
                                            std::optional<double> population_size) {
  const double N = population_size ? *population_size
                                   : design.known_population_size().value_or(estimate_population_size(sample_a));
  return linearized_variance(model, model_design(model, sample_a), sample_a.weights(), model_design(model, sample_b),
                             sample_b.response(), design, strategy.value_or(default_strategy(design)), N);
}

}  // namespace massimpute
