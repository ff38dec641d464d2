#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "massimpute/csv.hpp"
#include "massimpute/data_model.hpp"
#include "massimpute/mean_model.hpp"

namespace massimpute {

struct BootstrapOptions {
  unsigned threads = 1;
  // A replicate whose refit fails is redrawn at most this many times.
  std::size_t max_redraws = 10;
  SolverConfig solver{};
};

// Replicate weights and the replicate imputations paired with them: column k
// of both matrices belongs to replicate k.
struct ReplicateSet {
  std::size_t L = 0;
  Eigen::MatrixXd replicate_weights;      // n_A x L
  Eigen::MatrixXd replicate_imputations;  // n_A x L
  Eigen::VectorXd base_weights;
  Eigen::VectorXd base_imputations;
  std::vector<Eigen::VectorXd> replicate_coefficients;
  std::uint64_t master_seed = 0;
  std::size_t redraws = 0;
};

// Rao–Wu rescaling bootstrap: each replicate draws n_A - 1 units with
// replacement and sets w_i^(k) = w_i * n_A / (n_A - 1) * (times unit i drawn).
Eigen::MatrixXd replicate_weights(const Eigen::Ref<const Eigen::VectorXd>& weights, const DesignSpec& design,
                                  std::size_t L, std::uint64_t seed, unsigned threads = 1);
Eigen::MatrixXd replicate_weights(const SurveySample& sample_a, const DesignSpec& design, std::size_t L,
                                  std::uint64_t seed, unsigned threads = 1);

struct RefitResult {
  std::vector<Eigen::VectorXd> coefficients;
  std::size_t redraws = 0;
};

// For each replicate, resamples n_B rows of B with replacement and solves
// the estimating equations on the resample.
RefitResult bootstrap_refit(ModelFamily family, const Eigen::Ref<const Eigen::MatrixXd>& design_b,
                            const Eigen::Ref<const Eigen::VectorXd>& y_b, std::size_t L, std::uint64_t seed,
                            const BootstrapOptions& options = {});
std::vector<Eigen::VectorXd> bootstrap_refit(const SurveySample& sample_b, const FittedModel& model_spec,
                                             std::size_t L, std::uint64_t seed, const BootstrapOptions& options = {});

ReplicateSet build_replicates(const FittedModel& model, const SurveySample& sample_a, const SurveySample& sample_b,
                              const DesignSpec& design, std::size_t L, std::uint64_t seed,
                              const BootstrapOptions& options = {});
ReplicateSet build_replicates(const FittedModel& model, const Eigen::Ref<const Eigen::MatrixXd>& design_a,
                              const Eigen::Ref<const Eigen::VectorXd>& weights_a,
                              const Eigen::Ref<const Eigen::MatrixXd>& design_b,
                              const Eigen::Ref<const Eigen::VectorXd>& y_b, const DesignSpec& design, std::size_t L,
                              std::uint64_t seed, const BootstrapOptions& options = {});

// theta^(k) = N^-1 sum_A w_i^(k) yhat_i^(k).
Eigen::VectorXd replicate_estimates(const Eigen::Ref<const Eigen::MatrixXd>& replicate_weights,
                                    const Eigen::Ref<const Eigen::MatrixXd>& replicate_imputations,
                                    double population_size);

// L^-1 sum_k (theta^(k) - theta_hat)^2, centred at theta_hat rather than at
// the replicate mean.
double bootstrap_variance(double theta_hat, const Eigen::Ref<const Eigen::VectorXd>& replicate_estimates);

// The release file: A's columns, then yhat, then w_rep_k, yhat_rep_k for
// k = 1..L.
csv::Table augmented_table(const SurveySample& sample_a, const ReplicateSet& replicates);

std::filesystem::path manifest_path(const std::filesystem::path& data_path);

// Writes the release CSV and its sidecar manifest (L, seed, family, covariate
// names, plus whatever `provenance` holds).
void write_augmented_dataset(const SurveySample& sample_a, const ReplicateSet& replicates, const FittedModel& model,
                             const std::filesystem::path& path, const nlohmann::json& provenance = {});

struct AugmentedDataset {
  Eigen::VectorXd weights;
  Eigen::VectorXd imputations;
  Eigen::MatrixXd replicate_weights;
  Eigen::MatrixXd replicate_imputations;
  std::size_t L = 0;
};

// Reads only the weight, yhat and replicate columns; needs nothing from B.
AugmentedDataset read_augmented_dataset(const csv::Table& table, const std::string& weight_name);
AugmentedDataset read_augmented_dataset(const std::filesystem::path& path, const std::string& weight_name);

}  // namespace massimpute
