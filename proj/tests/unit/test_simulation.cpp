#include "helpers.hpp"

#include "massimpute/simulation.hpp"

using namespace massimpute;

namespace {

Population tiny_population() {
  Population p;
  p.x = Eigen::VectorXd::LinSpaced(6, 0.0, 5.0);
  p.y = 10.0 * p.x;
  return p;
}

bool same_report(const SimReport& a, const SimReport& b) {
  if (a.per_rep.size() != b.per_rep.size()) return false;
  for (std::size_t r = 0; r < a.per_rep.size(); ++r) {
    const auto &x = a.per_rep[r], &y = b.per_rep[r];
    if (x.theta_a != y.theta_a || x.theta_b != y.theta_b || x.theta_i != y.theta_i || x.theta_ipw != y.theta_ipw ||
        x.v_lin != y.v_lin || x.v_boot != y.v_boot)
      return false;
  }
  for (std::size_t e = 0; e < a.estimators.size(); ++e) {
    if (a.estimators[e].mse != b.estimators[e].mse) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("population moments") {
  const auto p1 = generate_population({PopulationModel::I, 100000, 1});
  CHECK(p1.size() == 100000);
  CHECK(std::abs(p1.x.mean() - 2.0) <= 0.02);
  CHECK(std::abs(p1.mean_y() - 5.0) <= 0.05);
  const auto p3 = generate_population({PopulationModel::III, 100000, 1});
  CHECK(std::abs(p3.mean_y() - 5.0) <= 0.05);
  const auto p2 = generate_population({PopulationModel::II, 100000, 1});
  CHECK(std::abs(p2.mean_y() - 5.0) <= 0.05);
  CHECK(p1.x == p3.x);
}

TEST_CASE("population generation is deterministic") {
  const auto a = generate_population({PopulationModel::II, 5000, 9});
  const auto b = generate_population({PopulationModel::II, 5000, 9});
  const auto c = generate_population({PopulationModel::II, 5000, 10});
  CHECK(a.y == b.y);
  CHECK(a.y != c.y);
}

TEST_CASE("SRS draws") {
  const auto pop = tiny_population();
  const auto census = draw_srs(pop, 6, 1);
  CHECK(census.weights() == Eigen::VectorXd::Ones(6));
  CHECK(census.response().sum() == pop.y.sum());
  const auto s = draw_srs(pop, 4, 2);
  CHECK((s.weights().array() == 1.5).all());
  CHECK_ERROR_KIND(draw_srs(pop, 7, 1), ErrorKind::SampleTooLarge);
}

TEST_CASE("SRS inclusion frequencies are uniform") {
  const auto pop = tiny_population();
  const int reps = 20000;
  std::vector<int> hits(6, 0);
  for (int r = 0; r < reps; ++r) {
    const auto s = draw_srs(pop, 2, static_cast<std::uint64_t>(r));
    REQUIRE(s.size() == 2);
    CHECK(s.covariates()(0, 0) != s.covariates()(1, 0));
    for (int i = 0; i < 2; ++i) ++hits[static_cast<int>(s.covariates()(i, 0))];
  }
  const double p = 1.0 / 3.0, se = std::sqrt(reps * p * (1 - p));
  for (int h : hits) CHECK(std::abs(h - reps * p) <= 3.0 * se);
}

TEST_CASE("stratum allocation") {
  CHECK(stratum_allocation(500) == std::pair<std::size_t, std::size_t>(350, 150));
  CHECK(stratum_allocation(1000) == std::pair<std::size_t, std::size_t>(700, 300));
  CHECK(stratum_allocation(5).first == 4);   // 3.5 rounds to even
  CHECK(stratum_allocation(15).first == 10);  // 10.5 rounds to even
}

TEST_CASE("stratified B draws") {
  const auto pop = generate_population({PopulationModel::I, 20000, 2});
  const auto b = draw_stratified_b(pop, 500, 3);
  CHECK(b.size() == 500);
  CHECK(b.kind() == SampleKind::NonProbabilityB);
  CHECK_FALSE(b.has_weights());
  const auto low = (b.covariates().col(0).array() <= 2.0).count();
  CHECK(low == 350);
  CHECK_ERROR_KIND(draw_stratified_b(pop, 19000, 3), ErrorKind::StratumExhausted);
}

TEST_CASE("naive B mean is biased low") {
  const auto pop = generate_population({PopulationModel::I, 100000, 1});
  double total = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) total += draw_stratified_b(pop, 500, s).response().mean();
  CHECK(std::abs(total / 50 - pop.mean_y() + 0.64) < 0.05);
}

TEST_CASE("config validation") {
  SimConfig c;
  c.population_size = 900;
  CHECK_THROWS_AS(c.validate(), Error);
  SimConfig r;
  r.reps = 0;
  CHECK_THROWS_AS(r.validate(), Error);
}

TEST_CASE("small Monte Carlo run") {
  SimConfig c;
  c.reps = 40;
  c.bootstrap_L = 20;
  c.population_size = 20000;
  const auto rep = run_monte_carlo(c);
  CHECK(rep.failures == 0);
  CHECK(rep.successful_reps == 40);
  CHECK(rep.estimator("A").remse == 100.0);
  CHECK(rep.estimators.size() == 4);
  CHECK(rep.variance_estimators.size() == 2);
  const auto& I = rep.estimator("I");
  CHECK(I.mse == doctest::Approx(I.bias * I.bias + I.mc_variance).epsilon(1e-12));

  SimConfig threaded = c;
  threaded.threads = 4;
  CHECK(same_report(rep, run_monte_carlo(threaded)));
  CHECK(same_report(rep, run_monte_carlo(c)));
}

TEST_CASE("linearized variance shrinks as n_B grows") {
  SimConfig c;
  c.model = PopulationModel::II;
  c.reps = 100;
  c.bootstrap_L = 0;
  const auto small = run_monte_carlo(c);
  c.n_b = 1000;
  const auto large = run_monte_carlo(c);
  CHECK(large.variance_estimator("linearization").mean < small.variance_estimator("linearization").mean);
}

TEST_CASE("model names") {
  CHECK(parse_population_model("II") == PopulationModel::II);
  CHECK(parse_population_model("3") == PopulationModel::III);
  CHECK(to_string(PopulationModel::I) == "I");
  CHECK_THROWS_AS(parse_population_model("IV"), Error);
}
