#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "massimpute/bootstrap.hpp"
#include "massimpute/cli.hpp"
#include "massimpute/errors.hpp"
#include "massimpute/estimators.hpp"
#include "massimpute/report.hpp"
#include "massimpute/simulation.hpp"
#include "massimpute/variance.hpp"

namespace py = pybind11;
using namespace massimpute;

namespace {

std::vector<std::string> default_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < p; ++k) names.push_back("x" + std::to_string(k + 1));
  return names;
}

std::vector<std::string> names_or_default(const std::optional<std::vector<std::string>>& names, Eigen::Index p) {
  if (!names) return default_names(p);
  if (static_cast<Eigen::Index>(names->size()) != p) {
    throw Error(ErrorKind::DimensionMismatch, "got " + std::to_string(names->size()) + " names for " +
                                                  std::to_string(p) + " columns");
  }
  return *names;
}

SurveySample sample_a(const FittedModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  return SurveySample::probability(model.requested_covariates, X, w);
}

SurveySample sample_b(const FittedModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return SurveySample::nonprobability(model.requested_covariates, X, y);
}

DesignSpec design_from(const std::string& name, std::optional<double> N) {
  if (name == "srs") {
    if (!N) throw Error(ErrorKind::InvalidArgument, "design 'srs' needs population_size");
    return DesignSpec::srs(*N);
  }
  if (name == "ppswr") return DesignSpec::ppswr(N);
  throw Error(ErrorKind::InvalidArgument, "unknown design '" + name + "'");
}

// Owned by the module for the life of the process.
PyObject* g_error_type = nullptr;

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mass imputation estimators for combining a non-probability sample with a probability sample";
  m.attr("__version__") = std::string(kToolVersion);

  g_error_type = PyErr_NewException("massimpute._core.MassImputeError", PyExc_RuntimeError, nullptr);
  m.attr("MassImputeError") = py::handle(g_error_type);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(g_error_type)(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(g_error_type, exc.ptr());
    }
  });

  py::class_<FittedModel>(m, "FittedModel")
      .def_property_readonly("family", [](const FittedModel& f) { return std::string(to_string(f.family)); })
      .def_readonly("beta_hat", &FittedModel::beta_hat)
      .def_readonly("iterations", &FittedModel::iterations)
      .def_readonly("final_score_norm", &FittedModel::final_score_norm)
      .def_readonly("covariate_names", &FittedModel::covariate_names)
      .def("to_json", [](const FittedModel& f) { return to_python(to_json(f)); })
      .def("__repr__", [](const FittedModel& f) {
        std::ostringstream s;
        s << "FittedModel(family=" << to_string(f.family) << ", p=" << f.beta_hat.size() << ")";
        return s.str();
      });

  m.def(
      "fit",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& family,
         std::optional<std::vector<std::string>> names, bool intercept) {
        const auto cols = names_or_default(names, X.cols());
        return fit_model(parse_family(family), SurveySample::nonprobability(cols, X, y), cols, intercept);
      },
      py::arg("X"), py::arg("y"), py::arg("family") = "linear", py::arg("names") = py::none(),
      py::arg("intercept") = true, "Fit m(x; beta) on sample B by solving the quasi-score equations.");

  m.def(
      "predict",
      [](const FittedModel& model, const Eigen::MatrixXd& X) {
        return predict_all(model, model_design(model, SurveySample::probability(model.requested_covariates, X,
                                                                                Eigen::VectorXd::Ones(X.rows()))));
      },
      py::arg("model"), py::arg("X"));

  m.def(
      "mass_imputation_mean",
      [](const FittedModel& model, const Eigen::MatrixXd& Xa, const Eigen::VectorXd& wa,
         std::optional<double> population_size) {
        return mass_imputation_estimate(model, sample_a(model, Xa, wa), population_size).theta_hat;
      },
      py::arg("model"), py::arg("Xa"), py::arg("wa"), py::arg("population_size") = py::none());

  m.def("ht_mean", &ht_mean, py::arg("values"), py::arg("weights"), py::arg("population_size"));

  m.def(
      "linearized_variance",
      [](const FittedModel& model, const Eigen::MatrixXd& Xa, const Eigen::VectorXd& wa, const Eigen::MatrixXd& Xb,
         const Eigen::VectorXd& yb, const std::string& design, std::optional<double> population_size) {
        const auto lin = linearized_variance(model, sample_a(model, Xa, wa), sample_b(model, Xb, yb),
                                             design_from(design, population_size), std::nullopt, population_size);
        py::dict d;
        d["v_a"] = lin.v_a;
        d["v_b"] = lin.v_b;
        d["v_total"] = lin.v_total;
        d["c_hat"] = lin.c_hat;
        d["strategy_a"] = std::string(to_string(lin.strategy_a));
        d["v_a_negative"] = lin.v_a_negative;
        return d;
      },
      py::arg("model"), py::arg("Xa"), py::arg("wa"), py::arg("Xb"), py::arg("yb"), py::arg("design") = "ppswr",
      py::arg("population_size") = py::none());

  m.def(
      "bootstrap",
      [](const FittedModel& model, const Eigen::MatrixXd& Xa, const Eigen::VectorXd& wa, const Eigen::MatrixXd& Xb,
         const Eigen::VectorXd& yb, std::size_t L, std::uint64_t seed, unsigned threads,
         std::optional<double> population_size) {
        BootstrapOptions opts;
        opts.threads = threads;
        const auto a = sample_a(model, Xa, wa);
        ReplicateSet rs;
        {
          py::gil_scoped_release release;
          rs = build_replicates(model, a, sample_b(model, Xb, yb), DesignSpec::ppswr(population_size), L, seed, opts);
        }
        const double N = population_size.value_or(estimate_population_size(a));
        const double theta = ht_mean(rs.base_imputations, rs.base_weights, N);
        const Eigen::VectorXd reps = replicate_estimates(rs.replicate_weights, rs.replicate_imputations, N);
        py::dict d;
        d["theta_hat"] = theta;
        d["variance"] = bootstrap_variance(theta, reps);
        d["replicate_estimates"] = reps;
        d["replicate_weights"] = rs.replicate_weights;
        d["replicate_imputations"] = rs.replicate_imputations;
        d["redraws"] = rs.redraws;
        return d;
      },
      py::arg("model"), py::arg("Xa"), py::arg("wa"), py::arg("Xb"), py::arg("yb"), py::arg("L") = 500,
      py::arg("seed") = 1, py::arg("threads") = 1, py::arg("population_size") = py::none());

  m.def(
      "ipw_mean",
      [](const Eigen::MatrixXd& Xa, const Eigen::VectorXd& wa, const Eigen::MatrixXd& Xb, const Eigen::VectorXd& yb,
         std::optional<double> population_size) {
        Eigen::MatrixXd A(Xa.rows(), Xa.cols() + 1), B(Xb.rows(), Xb.cols() + 1);
        A << Eigen::VectorXd::Ones(Xa.rows()), Xa;
        B << Eigen::VectorXd::Ones(Xb.rows()), Xb;
        const auto p = fit_propensity(A, wa, B);
        return ipw_mean(propensities(p, B), yb, population_size.value_or(wa.sum()));
      },
      py::arg("Xa"), py::arg("wa"), py::arg("Xb"), py::arg("yb"), py::arg("population_size") = py::none());

  m.def(
      "simulate",
      [](const std::string& model, std::size_t n_a, std::size_t n_b, std::size_t reps, std::size_t boot_l,
         std::size_t population_size, std::uint64_t seed, unsigned threads) {
        SimConfig c;
        c.model = parse_population_model(model);
        c.n_a = n_a;
        c.n_b = n_b;
        c.reps = reps;
        c.bootstrap_L = boot_l;
        c.population_size = population_size;
        c.master_seed = seed;
        c.threads = threads;
        SimReport r;
        {
          py::gil_scoped_release release;
          r = run_monte_carlo(c);
        }
        return to_python(to_json(r));
      },
      py::arg("model") = "I", py::arg("n_a") = 500, py::arg("n_b") = 500, py::arg("reps") = 1000,
      py::arg("boot_l") = 500, py::arg("population_size") = 100000, py::arg("seed") = 1, py::arg("threads") = 1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line tool in process; returns (exit_code, stdout, stderr).");
}
