// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "massimpute/bootstrap.hpp"
#include "massimpute/estimators.hpp"
#include "massimpute/cli.hpp"
#include "massimpute/simulation.hpp"
#include "massimpute/variance.hpp"
#include "oracles.hpp"

using namespace massimpute;

namespace {

struct Criterion {
  std::string id;
  std::string title;
  std::vector<std::string> details;
  bool ok = true;

  void check(bool pass, const std::string& what) {
    details.push_back(std::string(pass ? "ok   " : "FAIL ") + what);
    ok = ok && pass;
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string in_range(const std::string& name, double v, double lo, double hi, const char* f = "%.4f") {
  return name + " = " + fmt(f, v) + " in [" + fmt(f, lo) + ", " + fmt(f, hi) + "]";
}

bool between(double v, double lo, double hi) { return v >= lo && v <= hi; }

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

using Key = std::pair<PopulationModel, std::size_t>;

std::map<Key, SimReport> run_tables(double& model_one_seconds) {
  std::map<Key, SimReport> out;
  for (auto model : {PopulationModel::I, PopulationModel::II, PopulationModel::III}) {
    for (std::size_t n_b : {500u, 1000u}) {
      SimConfig c;
      c.model = model;
      c.n_b = n_b;
      c.master_seed = 1;
      c.threads = worker_threads();
      const auto t0 = std::chrono::steady_clock::now();
      out.emplace(Key{model, n_b}, run_monte_carlo(c));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (model == PopulationModel::I && n_b == 500) model_one_seconds = secs;
      std::fprintf(stderr, "  simulated model %s, n_B=%zu in %.1f s\n", std::string(to_string(model)).c_str(),
                   n_b, secs);
    }
  }
  return out;
}

Criterion criterion_table3_model1(const SimReport& r, double seconds) {
  Criterion c{"1", "Model I, n_B=500 Monte Carlo bias, variance and ReMSE"};
  const auto &I = r.estimator("I"), &B = r.estimator("B"), &ipw = r.estimator("IPW");
  c.check(r.failures == 0, "failed reps = " + std::to_string(r.failures));
  c.check(std::abs(I.bias) <= 0.010, "theta_I bias = " + fmt("%.4f", I.bias) + " within +-0.010");
  c.check(between(I.mc_variance, 0.008, 0.012), in_range("theta_I variance", I.mc_variance, 0.008, 0.012, "%.5f"));
  c.check(between(I.remse, 90, 125), in_range("ReMSE(theta_I)", I.remse, 90, 125, "%.1f"));
  c.check(between(B.bias, -0.66, -0.62), in_range("theta_B bias", B.bias, -0.66, -0.62));
  c.check(ipw.mc_variance > I.mc_variance,
          "var(theta_IPW) = " + fmt("%.5f", ipw.mc_variance) + " > var(theta_I) = " + fmt("%.5f", I.mc_variance));
  c.check(seconds <= 300.0, "runtime " + fmt("%.1f", seconds) + " s <= 300 s");
  return c;
}

Criterion criterion_table3_model2(const SimReport& r500, const SimReport& r1000) {
  Criterion c{"2", "Model II bias of the naive mean and ReMSE at n_B=1000"};
  c.check(r500.failures + r1000.failures == 0, "failed reps = " + std::to_string(r500.failures + r1000.failures));
  for (const auto* r : {&r500, &r1000}) {
    const double b = r->estimator("B").bias;
    c.check(between(b, -0.34, -0.30), in_range("n_B=" + std::to_string(r->config.n_b) + " theta_B bias", b, -0.34, -0.30));
  }
  const double remse = r1000.estimator("I").remse;
  c.check(between(remse, 50, 85), in_range("n_B=1000 ReMSE(theta_I)", remse, 50, 85, "%.1f"));
  return c;
}

Criterion criterion_table3_model3(const SimReport& r500, const SimReport& r1000) {
  Criterion c{"3", "Model III misspecification bias and MSE ordering"};
  c.check(r500.failures + r1000.failures == 0, "failed reps = " + std::to_string(r500.failures + r1000.failures));
  const double bias = r500.estimator("I").bias;
  c.check(between(bias, -0.08, -0.04), in_range("n_B=500 theta_I bias", bias, -0.08, -0.04));
  for (const auto* r : {&r500, &r1000}) {
    const double mi = r->estimator("I").mse, mp = r->estimator("IPW").mse;
    c.check(mi < mp, "n_B=" + std::to_string(r->config.n_b) + " MSE(theta_I) = " + fmt("%.5f", mi) +
                         " < MSE(theta_IPW) = " + fmt("%.5f", mp));
  }
  return c;
}

Criterion criterion_table4(const std::map<Key, SimReport>& runs) {
  Criterion c{"4", "Variance estimator means and relative biases"};
  const double lin_mean = runs.at({PopulationModel::I, 500}).variance_estimator("linearization").mean;
  c.check(between(lin_mean, 0.0092, 0.0112), in_range("Model I n_B=500 mean V_lin", lin_mean, 0.0092, 0.0112, "%.5f"));
  for (const auto& [key, r] : runs) {
    const std::string tag = "Model " + std::string(to_string(key.first)) + " n_B=" + std::to_string(key.second);
    for (const char* method : {"linearization", "bootstrap"}) {
      const double rb = r.variance_estimator(method).relative_bias;
      if (key.first == PopulationModel::III) {
        c.check(between(rb, -0.12, 0.08), in_range(tag + " " + method + " R.B.", rb, -0.12, 0.08, "%.3f"));
      } else {
        c.check(std::abs(rb) <= 0.10, tag + " " + method + " |R.B.| = " + fmt("%.3f", std::abs(rb)) + " <= 0.10");
      }
    }
  }
  return c;
}

Criterion criterion_exhaustive() {
  Criterion c{"5", "Exhaustive 6-unit SRS(n=2) enumeration"};
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> y{1.5, 4.0, -2.25, 3.0, 7.5, 0.25};
  const double N = 6, theta_n = oracle::mean(y);
  std::vector<double> thetas, vhats;
  for (const auto& s : oracle::all_subsets(6, 2)) {
    const Eigen::Vector2d v(y[s[0]], y[s[1]]), w(3.0, 3.0);
    thetas.push_back(ht_mean(v, w, N));
    vhats.push_back(ht_design_variance(v, w, DesignSpec::srs(N), VarianceStrategyA::ExactJoint, N));
  }
  double true_var = 0.0;
  for (double t : thetas) true_var += (t - theta_n) * (t - theta_n);
  true_var /= static_cast<double>(thetas.size());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(thetas.size() == 15, "enumerated " + std::to_string(thetas.size()) + " samples");
  c.check(std::abs(oracle::mean(thetas) - theta_n) <= 1e-12,
          "|mean theta_HT - theta_N| = " + fmt("%.2e", std::abs(oracle::mean(thetas) - theta_n)) + " <= 1e-12");
  c.check(std::abs(oracle::mean(vhats) - true_var) <= 1e-10,
          "|mean V_A - true variance| = " + fmt("%.2e", std::abs(oracle::mean(vhats) - true_var)) + " <= 1e-10");
  c.check(secs < 1.0, "runtime " + fmt("%.4f", secs) + " s < 1 s");
  return c;
}

Criterion criterion_identities() {
  Criterion c{"6", "Analytic identities"};
  std::mt19937_64 gen(2718);
  std::normal_distribution<double> n01;

  double worst_srs = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const int n = 2 + static_cast<int>(gen() % 80);
    const double N = n + 1 + static_cast<double>(gen() % 5000);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = 5.0 + 3.0 * n01(gen);
    const Eigen::VectorXd w = Eigen::VectorXd::Constant(n, N / n);
    const double got = ht_design_variance(v, w, DesignSpec::srs(N), VarianceStrategyA::ExactJoint, N);
    const double textbook = (1.0 - n / N) * oracle::sample_variance(v) / n;
    worst_srs = std::max(worst_srs, std::abs(got - textbook) / textbook);
  }
  c.check(worst_srs <= 1e-10, "SRS V_A vs (1-f)s^2/n, worst relative error " + fmt("%.2e", worst_srs) + " <= 1e-10");

  double worst_grad = 0.0;
  for (auto family : {ModelFamily::Linear, ModelFamily::Logistic, ModelFamily::LogLinear}) {
    for (int draw = 0; draw < 100; ++draw) {
      Eigen::VectorXd x(3), beta(3);
      for (int k = 0; k < 3; ++k) {
        x(k) = n01(gen);
        beta(k) = 0.7 * n01(gen);
      }
      const auto fd = oracle::central_difference([&](const Eigen::VectorXd& b) { return mean_value(family, x, b); },
                                                 beta);
      const auto g = mean_gradient(family, x, beta);
      worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(g.norm(), 1e-3));
    }
  }
  c.check(worst_grad <= 1e-6, "mean_gradient vs central differences, worst relative error " + fmt("%.2e", worst_grad) +
                                  " <= 1e-6");

  const auto pop = generate_population({PopulationModel::I, 100000, 1});
  Eigen::MatrixXd X(pop.size(), 2);
  X.col(0).setOnes();
  X.col(1) = pop.x;
  const auto model = fit_model(ModelFamily::Linear, SurveySample::nonprobability({"x"}, pop.x, pop.y), {"x"}, true);
  const double gap = (model.beta_hat - oracle::normal_equations(X, pop.y)).lpNorm<Eigen::Infinity>();
  c.check(gap <= 1e-8, "linear fit vs normal equations on the population, max gap " + fmt("%.2e", gap) + " <= 1e-8");
  return c;
}

Criterion criterion_sandwich() {
  Criterion c{"7", "Bootstrap covariance of linear coefficients vs sandwich"};
  const auto pop = generate_population({PopulationModel::I, 100000, 1});
  const auto b = draw_stratified_b(pop, 500, 7);
  const auto model = fit_model(ModelFamily::Linear, b, {"x"}, true);
  BootstrapOptions opts;
  opts.threads = worker_threads();
  const auto betas = bootstrap_refit(b, model, 5000, 11, opts);
  const auto dm = build_design_matrix(b, {"x"}, true);
  const Eigen::MatrixXd sandwich = oracle::ols_sandwich(dm.values, b.response());
  const Eigen::MatrixXd empirical = oracle::empirical_covariance(betas);
  const double rel = (empirical - sandwich).norm() / sandwich.norm();
  c.check(rel <= 0.15, "Frobenius relative difference " + fmt("%.4f", rel) + " <= 0.15 (L=5000)");
  return c;
}

Criterion criterion_release_file(const std::filesystem::path& dir) {
  Criterion c{"8", "Release file contract"};
  const auto pop = generate_population({PopulationModel::II, 100000, 1});
  const auto a = draw_srs(pop, 500, 21);
  const auto b = draw_stratified_b(pop, 500, 22);
  const auto a_path = dir / "sample_a.csv", b_path = dir / "sample_b.csv";
  write_sample(a, a_path);
  write_sample(b, b_path);

  const auto model = fit_model(ModelFamily::Linear, b, {"x"}, true);
  const double N = 100000;
  const auto rs = build_replicates(model, a, b, DesignSpec::srs(N), 500, 33);
  write_augmented_dataset(a, rs, model, dir / "mem.csv");
  const auto data = read_augmented_dataset(dir / "mem.csv", "w");
  const double theta_mem = ht_mean(rs.base_imputations, rs.base_weights, N);
  const double v_mem = bootstrap_variance(theta_mem, replicate_estimates(rs.replicate_weights, rs.replicate_imputations, N));
  const double theta_file = ht_mean(data.imputations, data.weights, N);
  const double v_file =
      bootstrap_variance(theta_file, replicate_estimates(data.replicate_weights, data.replicate_imputations, N));
  c.check(std::abs(theta_file - theta_mem) <= 1e-12,
          "|theta_I(file) - theta_I(memory)| = " + fmt("%.2e", std::abs(theta_file - theta_mem)) + " <= 1e-12");
  c.check(std::abs(v_file - v_mem) <= 1e-12,
          "|V_b(file) - V_b(memory)| = " + fmt("%.2e", std::abs(v_file - v_mem)) + " <= 1e-12");

  const auto aug = (dir / "aug.csv").string();
  const bool built = cli({"bootstrap", "--train", b_path.string(), "--sample-a", a_path.string(), "--response", "y",
                          "--covariates", "x", "--design", "srs", "--pop-size", "100000", "--L", "500", "--seed", "33",
                          "--out", aug}) == 0;
  c.check(built, "bootstrap subcommand wrote the release file");
  std::filesystem::rename(b_path, dir / "sample_b.hidden");
  const bool est = cli({"estimate", "--imputed", aug, "--pop-size", "100000", "--variance", "bootstrap", "--report",
                        (dir / "report.json").string()}) == 0;
  const auto report = nlohmann::json::parse(read_bytes(dir / "report.json"));
  const double v_cli = report["variance"]["v_total"].get<double>();
  const double theta_cli = report["theta_hat"].get<double>();
  c.check(est && std::abs(v_cli - v_mem) <= 1e-12 && std::abs(theta_cli - theta_mem) <= 1e-12,
          "estimate --variance bootstrap without sample B matches memory to 1e-12 (|dV| = " +
              fmt("%.2e", std::abs(v_cli - v_mem)) + ")");
  std::filesystem::rename(dir / "sample_b.hidden", b_path);

  const bool replayed =
      cli({"bootstrap", "--replay", manifest_path(aug).string(), "--out", (dir / "replay.csv").string()}) == 0;
  c.check(replayed && read_bytes(aug) == read_bytes(dir / "replay.csv") &&
              read_bytes(manifest_path(aug)) == read_bytes(manifest_path(dir / "replay.csv")),
          "replay from the manifest reproduces the release file byte for byte");
  return c;
}

Criterion criterion_threads(const std::filesystem::path& dir) {
  Criterion c{"9", "simulate output independent of --threads"};
  std::vector<std::string> base{"simulate", "--model", "III", "--n-b", "500", "--reps", "200", "--boot-l", "100",
                                "--seed", "1", "--per-rep"};
  auto one = base, eight = base;
  one.insert(one.end(), {(dir / "p1.csv").string(), "--threads", "1", "--report", (dir / "t1.json").string()});
  eight.insert(eight.end(), {(dir / "p8.csv").string(), "--threads", "8", "--report", (dir / "t8.json").string()});
  const bool ran = cli(one) == 0 && cli(eight) == 0;
  c.check(ran, "both runs succeeded");
  c.check(ran && read_bytes(dir / "t1.json") == read_bytes(dir / "t8.json"), "report JSON identical byte for byte");
  c.check(ran && read_bytes(dir / "p1.csv") == read_bytes(dir / "p8.csv"), "per-rep CSV identical byte for byte");
  return c;
}

}  // namespace

int main() {
  const auto dir = std::filesystem::temp_directory_path() / "massimpute_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  std::vector<Criterion> results;
  double model_one_seconds = 0.0;
  const auto runs = run_tables(model_one_seconds);
  results.push_back(criterion_table3_model1(runs.at({PopulationModel::I, 500}), model_one_seconds));
  results.push_back(criterion_table3_model2(runs.at({PopulationModel::II, 500}), runs.at({PopulationModel::II, 1000})));
  results.push_back(
      criterion_table3_model3(runs.at({PopulationModel::III, 500}), runs.at({PopulationModel::III, 1000})));
  results.push_back(criterion_table4(runs));
  results.push_back(criterion_exhaustive());
  results.push_back(criterion_identities());
  results.push_back(criterion_sandwich());
  results.push_back(criterion_release_file(dir));
  results.push_back(criterion_threads(dir));

  int failed = 0;
  for (const auto& r : results) {
    std::printf("%s criterion %s: %s\n", r.ok ? "PASS" : "FAIL", r.id.c_str(), r.title.c_str());
    for (const auto& d : r.details) std::printf("    %s\n", d.c_str());
    failed += r.ok ? 0 : 1;
  }

  std::printf("\nsummary (seed 1, 1000 reps, L=500)\n");
  std::printf("%-5s %-5s %9s %9s %9s %9s %10s %8s %8s %10s %8s\n", "model", "n_B", "bias_B", "bias_I", "var_I",
              "ReMSE_I", "ReMSE_IPW", "V_lin", "RB_lin", "V_boot", "RB_boot");
  for (const auto& [key, r] : runs) {
    const auto &lin = r.variance_estimator("linearization"), &boot = r.variance_estimator("bootstrap");
    std::printf("%-5s %-5zu %9.3f %9.3f %9.5f %9.1f %10.1f %8.5f %8.3f %10.5f %8.3f\n",
                std::string(to_string(key.first)).c_str(), key.second, r.estimator("B").bias, r.estimator("I").bias,
                r.estimator("I").mc_variance, r.estimator("I").remse, r.estimator("IPW").remse, lin.mean,
                lin.relative_bias, boot.mean, boot.relative_bias);
  }
  std::printf("\n%zu/%zu criteria passed\n", results.size() - failed, results.size());
  std::filesystem::remove_all(dir);
  return failed;
}
