#include "massimpute/mean_model.hpp"

#include <algorithm>
#include <cmath>

#include "massimpute/errors.hpp"

namespace massimpute {

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Linear: return "linear";
    case ModelFamily::Logistic: return "logistic";
    case ModelFamily::LogLinear: return "loglinear";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "linear") return ModelFamily::Linear;
  if (lower == "logistic") return ModelFamily::Logistic;
  if (lower == "loglinear" || lower == "log-linear" || lower == "poisson") return ModelFamily::LogLinear;
  throw Error(ErrorKind::InvalidArgument, "unknown model family '" + std::string(name) + "'");
}

namespace {

double clamp_exp_argument(double eta, bool& saturated) {
  if (eta > kExpArgumentLimit) {
    saturated = true;
    return kExpArgumentLimit;
  }
  if (eta < -kExpArgumentLimit) {
    saturated = true;
    return -kExpArgumentLimit;
  }
  return eta;
}

double apply_link_inverse(ModelFamily family, double eta, bool& saturated) {
  switch (family) {
    case ModelFamily::Linear:
      return eta;
    case ModelFamily::Logistic:
      return 1.0 / (1.0 + std::exp(-clamp_exp_argument(eta, saturated)));
    case ModelFamily::LogLinear:
      return std::exp(clamp_exp_argument(eta, saturated));
  }
  return eta;
}

void check_dims(Eigen::Index x, Eigen::Index beta) {
  if (x != beta) {
    throw Error(ErrorKind::DimensionMismatch,
                "x has length " + std::to_string(x) + ", beta has length " + std::to_string(beta));
  }
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

void check_rank(const Eigen::Ref<const Eigen::MatrixXd>& X) {
  if (X.rows() < X.cols()) {
    throw Error(ErrorKind::RankDeficient, std::to_string(X.rows()) + " rows cannot identify " +
                                              std::to_string(X.cols()) + " parameters");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    throw Error(ErrorKind::RankDeficient,
                "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + " columns");
  }
}

bool all_pinned(const Eigen::VectorXd& means, double tol) {
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    const double m = means(i);
    if (m > tol && m < 1.0 - tol) return false;
  }
  return true;
}

Coefficients solve_linear(const Eigen::Ref<const Eigen::MatrixXd>& X, const Eigen::Ref<const Eigen::VectorXd>& y,
                          const SolverConfig& config) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols()) {
    throw Error(ErrorKind::RankDeficient,
                "design has rank " + std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + " columns");
  }
  Coefficients out;
  out.beta = qr.solve(y);
  out.iterations = 1;
  Eigen::VectorXd score = quasi_score(ModelFamily::Linear, X, y, out.beta);
  out.score_norm = sup_norm(score);
  // Refinement on the residual: each pass is another least-squares solve.
  while (out.score_norm > config.tolerance && out.iterations < config.max_iterations) {
    Eigen::VectorXd candidate = out.beta + qr.solve(y - X * out.beta);
    const double norm = sup_norm(quasi_score(ModelFamily::Linear, X, y, candidate));
    ++out.iterations;
    if (!(norm < out.score_norm)) break;
    out.beta = std::move(candidate);
    out.score_norm = norm;
  }
  if (out.score_norm > config.tolerance) {
    throw Error(ErrorKind::NoConvergence,
                "least-squares score stalled at " + std::to_string(out.score_norm));
  }
  return out;
}

Coefficients solve_newton(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXd>& y, const SolverConfig& config) {
  check_rank(X);
  const double n = static_cast<double>(X.rows());
  Coefficients out;
  out.beta = Eigen::VectorXd::Zero(X.cols());

  Eigen::VectorXd means = mean_values(family, X, out.beta);
  Eigen::VectorXd score = X.transpose() * (y - means) / n;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    out.iterations = iter;
    if (family == ModelFamily::Logistic && all_pinned(means, config.pinned_tolerance) && iter > 1) {
      throw Error(ErrorKind::Separation, "all fitted probabilities within " +
                                             std::to_string(config.pinned_tolerance) + " of 0 or 1 (||beta|| = " +
                                             std::to_string(out.beta.norm()) + ")");
    }
    out.score_norm = sup_norm(score);
    if (out.score_norm <= config.tolerance) return out;

    const Eigen::VectorXd d = gradient_scale(family, means);
    const Eigen::MatrixXd info = X.transpose() * d.asDiagonal() * X / n;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::VectorXd step = ldlt.solve(score);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      throw Error(ErrorKind::NoConvergence, "Jacobian is singular at iteration " + std::to_string(iter));
    }

    const double current = score.norm();
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h, scale *= 0.5) {
      Eigen::VectorXd candidate = out.beta + scale * step;
      Eigen::VectorXd cand_means = mean_values(family, X, candidate);
      Eigen::VectorXd cand_score = X.transpose() * (y - cand_means) / n;
      if (cand_score.allFinite() && cand_score.norm() < current) {
        out.beta = std::move(candidate);
        means = std::move(cand_means);
        score = std::move(cand_score);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw Error(ErrorKind::NoConvergence, "no decrease in ||U|| after " + std::to_string(config.max_halvings) +
                                                " halvings; ||U||_inf = " + std::to_string(out.score_norm));
    }
    if (family == ModelFamily::Logistic && out.beta.norm() > config.divergence_bound) {
      throw Error(ErrorKind::Separation, "||beta|| exceeded " + std::to_string(config.divergence_bound));
    }
  }
  out.score_norm = sup_norm(score);
  if (family == ModelFamily::Logistic && all_pinned(means, config.pinned_tolerance)) {
    throw Error(ErrorKind::Separation, "all fitted probabilities pinned at 0 or 1");
  }
  if (out.score_norm <= config.tolerance) return out;
  throw Error(ErrorKind::NoConvergence, "no convergence in " + std::to_string(config.max_iterations) +
                                            " iterations; ||U||_inf = " + std::to_string(out.score_norm));
}

}  // namespace

MeanEvaluation evaluate_mean(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& beta) {
  check_dims(x.size(), beta.size());
  MeanEvaluation out;
  out.value = apply_link_inverse(family, x.dot(beta), out.saturated);
  return out;
}

double mean_value(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& beta) {
  return evaluate_mean(family, x, beta).value;
}

Eigen::VectorXd mean_gradient(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Eigen::Ref<const Eigen::VectorXd>& beta) {
  const double m = mean_value(family, x, beta);
  switch (family) {
    case ModelFamily::Linear: return x;
    case ModelFamily::Logistic: return m * (1.0 - m) * x;
    case ModelFamily::LogLinear: return m * x;
  }
  return x;
}

Eigen::VectorXd mean_values(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& beta) {
  check_dims(X.cols(), beta.size());
  Eigen::VectorXd eta = X * beta;
  if (family == ModelFamily::Linear) return eta;
  bool saturated = false;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = apply_link_inverse(family, eta(i), saturated);
  return eta;
}

Eigen::VectorXd gradient_scale(ModelFamily family, const Eigen::Ref<const Eigen::VectorXd>& means) {
  switch (family) {
    case ModelFamily::Linear: return Eigen::VectorXd::Ones(means.size());
    case ModelFamily::Logistic: return (means.array() * (1.0 - means.array())).matrix();
    case ModelFamily::LogLinear: return means;
  }
  return means;
}

Eigen::VectorXd quasi_score(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                            const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::Ref<const Eigen::VectorXd>& beta) {
  if (X.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "design rows do not match responses");
  if (X.rows() == 0) throw Error(ErrorKind::InvalidArgument, "empty sample");
  const Eigen::VectorXd residual = y - mean_values(family, X, beta);
  return X.transpose() * residual / static_cast<double>(X.rows());
}

Eigen::VectorXd quasi_score(ModelFamily family, const SurveySample& sample_b, const DesignMatrix& design,
                            const Eigen::Ref<const Eigen::VectorXd>& beta) {
  return quasi_score(family, design.values, sample_b.response(), beta);
}

Coefficients solve_quasi_score(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y, const SolverConfig& config) {
  if (X.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "design rows do not match responses");
  if (X.cols() == 0) throw Error(ErrorKind::InvalidArgument, "design has no columns");
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorKind::NonNumericValue, "non-finite design or response");
  if (family == ModelFamily::Linear) {
    if (X.rows() < X.cols()) {
      throw Error(ErrorKind::RankDeficient, std::to_string(X.rows()) + " rows cannot identify " +
                                                std::to_string(X.cols()) + " parameters");
    }
    return solve_linear(X, y, config);
  }
  return solve_newton(family, X, y, config);
}

FittedModel fit_model(ModelFamily family, const SurveySample& sample_b, const DesignMatrix& design,
                      const SolverConfig& config) {
  if (design.rows() != sample_b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "design rows do not match sample B");
  }
  Coefficients coef = solve_quasi_score(family, design.values, sample_b.response(), config);
  FittedModel model;
  model.family = family;
  model.beta_hat = std::move(coef.beta);
  model.iterations = coef.iterations;
  model.final_score_norm = coef.score_norm;
  model.covariate_names = design.column_names;
  model.intercept = design.intercept_included;
  for (const auto& name : design.column_names) {
    if (name != kInterceptName) model.requested_covariates.push_back(name);
  }
  model.encoding = sample_b.encoding();
  model.response_name = sample_b.response_name();
  model.n_train = sample_b.size();
  return model;
}

FittedModel fit_model(ModelFamily family, const SurveySample& sample_b, const std::vector<std::string>& covariates,
                      bool intercept, const SolverConfig& config) {
  return fit_model(family, sample_b, build_design_matrix(sample_b, covariates, intercept), config);
}

DesignMatrix model_design(const FittedModel& model, const SurveySample& sample) {
  DesignMatrix design = build_design_matrix(sample, model.requested_covariates, model.intercept);
  if (design.column_names != model.covariate_names) {
    throw Error(ErrorKind::ColumnMismatch, "sample columns do not reproduce the fitted design");
  }
  return design;
}

Eigen::VectorXd predict_all(const FittedModel& model, const DesignMatrix& design_a) {
  if (design_a.column_names != model.covariate_names) {
    std::string detail = "expected [";
    for (std::size_t i = 0; i < model.covariate_names.size(); ++i) {
      detail += (i ? "," : "") + model.covariate_names[i];
    }
    detail += "]";
    throw Error(ErrorKind::ColumnMismatch, detail);
  }
  return mean_values(model.family, design_a.values, model.beta_hat);
}

}  // namespace massimpute
