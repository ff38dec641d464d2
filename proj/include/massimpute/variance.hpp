#pragma once

#include <Eigen/Dense>
#include <optional>

#include "massimpute/data_model.hpp"
#include "massimpute/estimators.hpp"
#include "massimpute/mean_model.hpp"

namespace massimpute {

// Linearization variance pieces for the mass imputation mean.
// v_a is the design variance of the HT mean of the predictions over A; v_b
// is the model variance contributed by estimating beta on B. The extra term
// that appears only under a misspecified model is not estimable and is not
// included.
struct LinearizationComponents {
  Eigen::VectorXd c_hat;
  Eigen::VectorXd residuals;
  double v_a = 0.0;
  double v_b = 0.0;
  double v_total = 0.0;
  VarianceStrategyA strategy_a = VarianceStrategyA::ExactJoint;
  // ExactJoint can go negative for designs with awkward joint probabilities;
  // the value is kept as is and flagged.
  bool v_a_negative = false;
  double population_size = 0.0;

  VarianceRecord record() const;
};

// Solves (sum_B mdot_i x_i') c = sum_A w_i mdot_i, the population total of
// mdot being replaced by its HT estimate. For the linear family this is
// c = (sum_B x x')^-1 sum_A w x.
Eigen::VectorXd compute_c_hat(const FittedModel& model, const DesignMatrix& design_a,
                              const Eigen::Ref<const Eigen::VectorXd>& weights_a, const DesignMatrix& design_b);
Eigen::VectorXd compute_c_hat(const FittedModel& model, const SurveySample& sample_a, const SurveySample& sample_b);

// N^-2 sum_B e_i^2 (c' x_i)^2.
double variance_component_b(const FittedModel& model, const DesignMatrix& design_b,
                            const Eigen::Ref<const Eigen::VectorXd>& y_b, const Eigen::Ref<const Eigen::VectorXd>& c_hat,
                            double population_size);
double variance_component_b(const FittedModel& model, const SurveySample& sample_b,
                            const Eigen::Ref<const Eigen::VectorXd>& c_hat, double population_size);

// Design variance of N^-1 sum_A w_i v_i.
//   ExactJoint:  N^-2 sum_i sum_j (pi_ij - pi_i pi_j) / pi_ij * w_i v_i * w_j v_j
//   PPSWRApprox: N^-2 n/(n-1) sum_i (w_i v_i - mean_j w_j v_j)^2
double ht_design_variance(const Eigen::Ref<const Eigen::VectorXd>& values, const Eigen::Ref<const Eigen::VectorXd>& weights,
                          const DesignSpec& design, VarianceStrategyA strategy, double population_size);

double variance_component_a(const FittedModel& model, const SurveySample& sample_a, const DesignSpec& design,
                            VarianceStrategyA strategy, std::optional<double> population_size = std::nullopt);

// ExactJoint when the design provides joint probabilities, else PPSWRApprox.
VarianceStrategyA default_strategy(const DesignSpec& design);

// N resolves to the explicit argument, then the design's N, then sum of w.
LinearizationComponents linearized_variance(const FittedModel& model, const SurveySample& sample_a,
                                            const SurveySample& sample_b, const DesignSpec& design,
                                            std::optional<VarianceStrategyA> strategy = std::nullopt,
                                            std::optional<double> population_size = std::nullopt);

// Same computation on prepared designs; used by the simulation driver.
LinearizationComponents linearized_variance(const FittedModel& model, const DesignMatrix& design_a,
                                            const Eigen::Ref<const Eigen::VectorXd>& weights_a,
                                            const DesignMatrix& design_b, const Eigen::Ref<const Eigen::VectorXd>& y_b,
                                            const DesignSpec& design, VarianceStrategyA strategy,
                                            double population_size);

}  // namespace massimpute
