#include "helpers.hpp"
#include "oracles.hpp"

#include "massimpute/mean_model.hpp"
#include "massimpute/simulation.hpp"

using namespace massimpute;

namespace {

const ModelFamily kFamilies[] = {ModelFamily::Linear, ModelFamily::Logistic, ModelFamily::LogLinear};

SurveySample simulated_b(ModelFamily family, int n, std::uint64_t seed, Eigen::Vector2d beta) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nx(0.5, 1.0), ne(0.0, 1.0);
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = nx(gen);
    const double eta = beta(0) + beta(1) * X(i, 0);
    if (family == ModelFamily::Linear) {
      y(i) = eta + ne(gen);
    } else if (family == ModelFamily::Logistic) {
      y(i) = std::uniform_real_distribution<double>(0, 1)(gen) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    } else {
      y(i) = static_cast<double>(std::poisson_distribution<int>(std::exp(eta))(gen));
    }
  }
  return SurveySample::nonprobability({"x"}, X, y);
}

}  // namespace

TEST_CASE("mean values of the three families") {
  const Eigen::Vector2d x(1, 2), zero(0, 0);
  CHECK(mean_value(ModelFamily::Logistic, x, zero) == 0.5);
  CHECK(mean_value(ModelFamily::Linear, x, Eigen::Vector2d(1, 2)) == 5.0);
  CHECK(mean_value(ModelFamily::LogLinear, x, zero) == 1.0);
  CHECK_ERROR_KIND(mean_value(ModelFamily::Linear, x, Eigen::Vector3d(1, 2, 3)), ErrorKind::DimensionMismatch);
}

TEST_CASE("mean gradients by hand") {
  CHECK(mean_gradient(ModelFamily::Linear, Eigen::Vector2d(1, 3), Eigen::Vector2d(7, -2)) == Eigen::Vector2d(1, 3));
  const auto g = mean_gradient(ModelFamily::Logistic, Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 0));
  CHECK(g(0) == 0.25);
  CHECK(g(1) == 0.0);
}

TEST_CASE("exp overflow is clamped and flagged") {
  const auto big = evaluate_mean(ModelFamily::LogLinear, Eigen::Vector2d(1, 1), Eigen::Vector2d(500, 500));
  CHECK(big.saturated);
  CHECK(std::isfinite(big.value));
  const auto lo = evaluate_mean(ModelFamily::Logistic, Eigen::Vector2d(1, 1), Eigen::Vector2d(-800, 0));
  CHECK(lo.saturated);
  CHECK(lo.value >= 0.0);
  CHECK(lo.value < 1e-300);
  CHECK_FALSE(evaluate_mean(ModelFamily::Logistic, Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)).saturated);
}

TEST_CASE("mean_gradient matches central finite differences") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (auto family : kFamilies) {
    for (int draw = 0; draw < 100; ++draw) {
      Eigen::VectorXd x(3), beta(3);
      for (int k = 0; k < 3; ++k) {
        x(k) = u(gen);
        beta(k) = u(gen);
      }
      const auto fd = oracle::central_difference([&](const Eigen::VectorXd& b) { return mean_value(family, x, b); },
                                                 beta);
      const auto g = mean_gradient(family, x, beta);
      CHECK((g - fd).norm() <= 1e-6 * std::max(g.norm(), 1e-3));
    }
  }
}

TEST_CASE("quasi score by hand") {
  Eigen::MatrixXd X(1, 2);
  X << 1, 2;
  const auto u = quasi_score(ModelFamily::Linear, X, Eigen::VectorXd::Constant(1, 3.0), Eigen::Vector2d(0, 0));
  CHECK(u == Eigen::Vector2d(3, 6));
  Eigen::MatrixXd X2(2, 2);
  X2 << 1, 0, 1, 1;
  CHECK(quasi_score(ModelFamily::Linear, X2, Eigen::Vector2d(1, 3), Eigen::Vector2d(1, 2)).isZero());
}

TEST_CASE("linear fit on noiseless data is exact") {
  Eigen::MatrixXd X(3, 1);
  X << 0, 1, 2;
  const auto b = SurveySample::nonprobability({"x"}, X, Eigen::Vector3d(1, 3, 5));
  const auto m = fit_model(ModelFamily::Linear, b, {"x"}, true);
  CHECK(std::abs(m.beta_hat(0) - 1.0) < 1e-10);
  CHECK(std::abs(m.beta_hat(1) - 2.0) < 1e-10);
  CHECK(m.covariate_names == std::vector<std::string>{kInterceptName, "x"});
}

TEST_CASE("linear fit equals the normal-equations solution on population data") {
  const auto pop = generate_population({PopulationModel::I, 20000, 5});
  Eigen::MatrixXd X(pop.size(), 2);
  X.col(0).setOnes();
  X.col(1) = pop.x;
  const auto b = SurveySample::nonprobability({"x"}, pop.x, pop.y);
  const auto m = fit_model(ModelFamily::Linear, b, {"x"}, true);
  const auto ref = oracle::normal_equations(X, pop.y);
  CHECK((m.beta_hat - ref).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("nonlinear fits solve the score equations") {
  for (auto family : {ModelFamily::Logistic, ModelFamily::LogLinear}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto b = simulated_b(family, 400, seed, {0.3, 0.6});
      const auto m = fit_model(family, b, {"x"}, true);
      const auto dm = build_design_matrix(b, {"x"}, true);
      CHECK(quasi_score(family, b, dm, m.beta_hat).lpNorm<Eigen::Infinity>() <= 1e-10);
      CHECK(m.final_score_norm <= 1e-10);
      CHECK(m.iterations <= 100);
      const auto again = fit_model(family, b, {"x"}, true);
      CHECK(again.beta_hat == m.beta_hat);
    }
  }
}

TEST_CASE("residuals sum to zero with an intercept") {
  const auto b = simulated_b(ModelFamily::Linear, 300, 4, {1.0, -2.0});
  const auto m = fit_model(ModelFamily::Linear, b, {"x"}, true);
  const auto dm = build_design_matrix(b, {"x"}, true);
  const Eigen::VectorXd e = b.response() - predict_all(m, dm);
  CHECK(std::abs(e.sum()) < 1e-8);
  CHECK((dm.values.transpose() * e).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("intercept-only logistic predicts the sample mean") {
  const auto b = simulated_b(ModelFamily::Logistic, 200, 8, {0.2, 0.0});
  const auto m = fit_model(ModelFamily::Logistic, b, {"x"}, true);
  DesignMatrix dm{Eigen::MatrixXd::Ones(5, 1), true, {kInterceptName}};
  FittedModel intercept_only = fit_model(ModelFamily::Logistic, b, DesignMatrix{Eigen::MatrixXd::Ones(200, 1), true,
                                                                              {kInterceptName}});
  const auto yhat = predict_all(intercept_only, dm);
  for (Eigen::Index i = 0; i < yhat.size(); ++i) CHECK(std::abs(yhat(i) - b.response().mean()) < 1e-10);
  CHECK_ERROR_KIND(predict_all(m, dm), ErrorKind::ColumnMismatch);
}

TEST_CASE("identity model predicts the covariate") {
  FittedModel m;
  m.family = ModelFamily::Linear;
  m.beta_hat = Eigen::Vector2d(0, 1);
  m.covariate_names = {kInterceptName, "x"};
  Eigen::MatrixXd X(2, 2);
  X << 1, 1, 1, 3;
  CHECK(predict_all(m, DesignMatrix{X, true, {kInterceptName, "x"}}) == Eigen::Vector2d(1, 3));
  CHECK_ERROR_KIND(predict_all(m, DesignMatrix{X, true, {kInterceptName, "z"}}), ErrorKind::ColumnMismatch);
}

TEST_CASE("predictions are invariant to invertible recoding of covariates") {
  for (auto family : kFamilies) {
    const auto b = simulated_b(family, 300, 17, {0.2, 0.5});
    Eigen::MatrixXd X2(b.size(), 2);
    X2.col(0) = b.covariates().col(0);
    X2.col(1) = b.covariates().col(0).array().square();
    const auto b2 = SurveySample::nonprobability({"x", "xx"}, X2, b.response());
    Eigen::Matrix2d T;
    T << 2.0, -1.0, 0.5, 3.0;
    const Eigen::MatrixXd X3 = X2 * T;
    const auto b3 = SurveySample::nonprobability({"u", "v"}, X3, b.response());
    const auto m2 = fit_model(family, b2, {"x", "xx"}, true);
    const auto m3 = fit_model(family, b3, {"u", "v"}, true);
    const auto p2 = predict_all(m2, model_design(m2, b2));
    const auto p3 = predict_all(m3, model_design(m3, b3));
    CHECK((p2 - p3).lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(1.0, p2.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("separated logistic data raises Separation") {
  Eigen::MatrixXd X(6, 1);
  X << -3, -2, -1, 1, 2, 3;
  const auto b = SurveySample::nonprobability({"x"}, X, (Eigen::VectorXd(6) << 0, 0, 0, 1, 1, 1).finished());
  CHECK_ERROR_KIND(fit_model(ModelFamily::Logistic, b, {"x"}, true), ErrorKind::Separation);
}

TEST_CASE("collinear designs are rejected") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10;
  const auto b = SurveySample::nonprobability({"a", "b"}, X, Eigen::VectorXd::LinSpaced(5, 0, 4));
  CHECK_ERROR_KIND(fit_model(ModelFamily::Linear, b, {"a", "b"}, true), ErrorKind::RankDeficient);
  CHECK_ERROR_KIND(fit_model(ModelFamily::LogLinear, b, {"a", "b"}, true), ErrorKind::RankDeficient);
}

TEST_CASE("iteration cap raises NoConvergence") {
  const auto b = simulated_b(ModelFamily::Logistic, 200, 3, {0.5, 1.0});
  SolverConfig cfg;
  cfg.max_iterations = 1;
  CHECK_ERROR_KIND(fit_model(ModelFamily::Logistic, b, {"x"}, true, cfg), ErrorKind::NoConvergence);
}

TEST_CASE("family names") {
  CHECK(parse_family("logistic") == ModelFamily::Logistic);
  CHECK(parse_family("loglinear") == ModelFamily::LogLinear);
  CHECK(to_string(ModelFamily::Linear) == "linear");
  CHECK_THROWS_AS(parse_family("probit"), Error);
}
