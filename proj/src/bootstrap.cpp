#include "massimpute/bootstrap.hpp"

#include <fstream>
#include <variant>

#include "massimpute/errors.hpp"
#include "massimpute/parallel.hpp"
#include "massimpute/random.hpp"

namespace massimpute {

namespace {

void require_replicates(std::size_t L) {
  if (L == 0) throw Error(ErrorKind::InvalidArgument, "number of replicates L must be at least 1");
}

}  // namespace

Eigen::MatrixXd replicate_weights(const Eigen::Ref<const Eigen::VectorXd>& weights, const DesignSpec& design,
                                  std::size_t L, std::uint64_t seed, unsigned threads) {
  require_replicates(L);
  if (std::holds_alternative<JointProbabilities>(design.design)) {
    throw Error(ErrorKind::UnsupportedDesign, "replicate weights support SRS and PPSWR designs only");
  }
  const auto n = static_cast<std::size_t>(weights.size());
  if (n < 2) throw Error(ErrorKind::UnsupportedDesign, "Rao-Wu resample size n_A - 1 is zero");

  const double factor = static_cast<double>(n) / static_cast<double>(n - 1);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
  parallel_for(L, threads, [&](std::size_t k) {
    rng::Generator gen(rng::derive_seed(seed, rng::Stream::ReplicateWeights, k));
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t draw = 0; draw + 1 < n; ++draw) counts(static_cast<Eigen::Index>(gen.below(n))) += 1.0;
    out.col(static_cast<Eigen::Index>(k)) = factor * weights.cwiseProduct(counts);
  });
  return out;
}

Eigen::MatrixXd replicate_weights(const SurveySample& sample_a, const DesignSpec& design, std::size_t L,
                                  std::uint64_t seed, unsigned threads) {
  return replicate_weights(sample_a.weights(), design, L, seed, threads);
}

RefitResult bootstrap_refit(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& design_b,
                            const Eigen::Ref<const Eigen::VectorXd>& y_b, std::size_t L, std::uint64_t seed,
                            const BootstrapOptions& options) {
  require_replicates(L);
  const auto n = static_cast<std::size_t>(design_b.rows());
  if (n == 0 || static_cast<std::size_t>(y_b.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "sample B design and response");
  }

  RefitResult result;
  result.coefficients.resize(L);
  std::vector<std::size_t> redraws(L, 0);

  parallel_for(L, options.threads, [&](std::size_t k) {
    rng::Generator gen(rng::derive_seed(seed, rng::Stream::ReplicateRefit, k));
    Eigen::MatrixXd X(design_b.rows(), design_b.cols());
    Eigen::VectorXd y(y_b.size());
    for (std::size_t attempt = 0;; ++attempt) {
      for (std::size_t r = 0; r < n; ++r) {
        const auto src = static_cast<Eigen::Index>(gen.below(n));
        X.row(static_cast<Eigen::Index>(r)) = design_b.row(src);
        y(static_cast<Eigen::Index>(r)) = y_b(src);
      }
      try {
        result.coefficients[k] = solve_quasi_score(family, X, y, options.solver).beta;
        redraws[k] = attempt;
        return;
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::Numerical) throw;
        if (attempt >= options.max_redraws) {
          throw Error(ErrorKind::BootstrapFailure, "replicate " + std::to_string(k + 1) + " failed after " +
                                                       std::to_string(attempt + 1) + " draws (last: " +
                                                       e.what() + ")");
        }
      }
    }
  });
  for (auto r : redraws) result.redraws += r;
  return result;
}

std::vector<Eigen::VectorXd> bootstrap_refit(const SurveySample& sample_b, const FittedModel& model_spec,
                                             std::size_t L, std::uint64_t seed, const BootstrapOptions& options) {
  const DesignMatrix design = model_design(model_spec, sample_b);
  return bootstrap_refit(model_spec.family, design.values, sample_b.response(), L, seed, options).coefficients;
}

ReplicateSet build_replicates(const FittedModel& model, const Eigen::Ref<const Eigen::MatrixXd>& design_a,
                              const Eigen::Ref<const Eigen::VectorXd>& weights_a,
                              const Eigen::Ref<const Eigen::MatrixXd>& design_b,
                              const Eigen::Ref<const Eigen::VectorXd>& y_b, const DesignSpec& design, std::size_t L,
                              std::uint64_t seed, const BootstrapOptions& options) {
  require_replicates(L);
  ReplicateSet set;
  set.L = L;
  set.master_seed = seed;
  set.base_weights = weights_a;
  set.base_imputations = mean_values(model.family, design_a, model.beta_hat);
  set.replicate_weights = replicate_weights(weights_a, design, L, seed, options.threads);

  RefitResult refit = bootstrap_refit(model.family, design_b, y_b, L, seed, options);
  set.redraws = refit.redraws;
  set.replicate_imputations.resize(design_a.rows(), static_cast<Eigen::Index>(L));
  for (std::size_t k = 0; k < L; ++k) {
    set.replicate_imputations.col(static_cast<Eigen::Index>(k)) =
        mean_values(model.family, design_a, refit.coefficients[k]);
  }
  set.replicate_coefficients = std::move(refit.coefficients);
  return set;
}

ReplicateSet build_replicates(const FittedModel& model, const SurveySample& sample_a, const SurveySample& sample_b,
                              const DesignSpec& design, std::size_t L, std::uint64_t seed,
                              const BootstrapOptions& options) {
  const DesignMatrix xa = model_design(model, sample_a);
  const DesignMatrix xb = model_design(model, sample_b);
  return build_replicates(model, xa.values, sample_a.weights(), xb.values, sample_b.response(), design, L, seed,
                          options);
}

Eigen::VectorXd replicate_estimates(const Eigen::Ref<const Eigen::MatrixXd>& replicate_weights,
                                    const Eigen::Ref<const Eigen::MatrixXd>& replicate_imputations,
                                    double population_size) {
  if (replicate_weights.rows() != replicate_imputations.rows() ||
      replicate_weights.cols() != replicate_imputations.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "replicate weights and imputations differ in shape");
  }
  if (!(population_size > 0.0)) throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  Eigen::VectorXd out(replicate_weights.cols());
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    out(k) = replicate_weights.col(k).dot(replicate_imputations.col(k)) / population_size;
  }
  return out;
}

double bootstrap_variance(double theta_hat, const Eigen::Ref<const Eigen::VectorXd>& replicate_estimates) {
  if (replicate_estimates.size() == 0) throw Error(ErrorKind::InvalidArgument, "no replicate estimates");
  return (replicate_estimates.array() - theta_hat).square().mean();
}

csv::Table augmented_table(const SurveySample& sample_a, const ReplicateSet& replicates) {
  const auto n = static_cast<Eigen::Index>(sample_a.size());
  if (replicates.replicate_weights.rows() != n || replicates.base_imputations.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "replicate set does not belong to this sample");
  }
  csv::Table table = sample_table(sample_a);
  if (table.find("yhat")) throw Error(ErrorKind::InvalidArgument, "sample A already has a 'yhat' column");
  table.header.emplace_back("yhat");
  for (std::size_t k = 1; k <= replicates.L; ++k) {
    table.header.push_back("w_rep_" + std::to_string(k));
    table.header.push_back("yhat_rep_" + std::to_string(k));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& row = table.rows[static_cast<std::size_t>(i)];
    row.reserve(table.header.size());
    row.push_back(csv::format_double(replicates.base_imputations(i)));
    for (std::size_t k = 0; k < replicates.L; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      row.push_back(csv::format_double(replicates.replicate_weights(i, kk)));
      row.push_back(csv::format_double(replicates.replicate_imputations(i, kk)));
    }
  }
  return table;
}

std::filesystem::path manifest_path(const std::filesystem::path& data_path) {
  return std::filesystem::path(data_path.string() + ".manifest.json");
}

void write_augmented_dataset(const SurveySample& sample_a, const ReplicateSet& replicates, const FittedModel& model,
                             const std::filesystem::path& path, const nlohmann::json& provenance) {
  csv::write(path, augmented_table(sample_a, replicates));

  nlohmann::ordered_json manifest;
  manifest["kind"] = "augmented_release";
  manifest["L"] = replicates.L;
  manifest["seed"] = replicates.master_seed;
  manifest["model_family"] = std::string(to_string(model.family));
  manifest["covariate_names"] = model.covariate_names;
  manifest["beta_hat"] = std::vector<double>(model.beta_hat.data(), model.beta_hat.data() + model.beta_hat.size());
  manifest["weight_column"] = sample_a.weight_name().value_or("w");
  manifest["replicate_method"] = "rao-wu rescaling, resample size n_A - 1";
  manifest["redraws"] = replicates.redraws;
  if (!provenance.is_null()) manifest["provenance"] = provenance;

  std::ofstream out(manifest_path(path), std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IOFailure, "cannot write " + manifest_path(path).string());
  out << manifest.dump(2) << '\n';
}

AugmentedDataset read_augmented_dataset(const csv::Table& table, const std::string& weight_name) {
  auto column = [&table](const std::string& name) {
    auto idx = table.find(name);
    if (!idx) throw Error(ErrorKind::MissingColumn, name);
    return *idx;
  };
  auto numeric = [&table](std::size_t r, std::size_t c) {
    auto v = csv::parse_double(table.rows[r][c]);
    if (!v) {
      throw Error(ErrorKind::NonNumericValue, "column " + table.header[c] + ", row " + std::to_string(r + 1));
    }
    return *v;
  };

  if (table.rows.empty()) throw Error(ErrorKind::EmptyFile, "augmented file has no rows");
  std::size_t L = 0;
  while (table.find("w_rep_" + std::to_string(L + 1))) ++L;

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  AugmentedDataset data;
  data.L = L;
  data.weights.resize(n);
  data.imputations.resize(n);
  data.replicate_weights.resize(n, static_cast<Eigen::Index>(L));
  data.replicate_imputations.resize(n, static_cast<Eigen::Index>(L));

  const std::size_t w_col = column(weight_name);
  const std::size_t y_col = column("yhat");
  std::vector<std::size_t> wk(L), yk(L);
  for (std::size_t k = 0; k < L; ++k) {
    wk[k] = column("w_rep_" + std::to_string(k + 1));
    yk[k] = column("yhat_rep_" + std::to_string(k + 1));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    data.weights(i) = numeric(r, w_col);
    if (!(data.weights(i) > 0.0)) throw Error(ErrorKind::NonPositiveWeight, "row " + std::to_string(r + 1));
    data.imputations(i) = numeric(r, y_col);
    for (std::size_t k = 0; k < L; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      data.replicate_weights(i, kk) = numeric(r, wk[k]);
      data.replicate_imputations(i, kk) = numeric(r, yk[k]);
    }
  }
  return data;
}

AugmentedDataset read_augmented_dataset(const std::filesystem::path& path, const std::string& weight_name) {
  return read_augmented_dataset(csv::read(path), weight_name);
}

}  // namespace massimpute
