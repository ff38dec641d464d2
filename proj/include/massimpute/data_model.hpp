#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "massimpute/csv.hpp"

namespace massimpute {

inline constexpr const char* kInterceptName = "(Intercept)";

enum class SampleKind { ProbabilityA, NonProbabilityB };

// One declared covariate column. Categorical columns are expanded into 0/1
// indicators for every level except `reference_level`; the indicator for
// level L of column c is named "c=L".
struct CovariateDecl {
  std::string name;
  bool categorical = false;
  std::string reference_level;
  // Full level set including the reference. Empty means "take the sorted
  // distinct values found in the data"; load_sample fills it in.
  std::vector<std::string> levels;
};

struct SampleSchema {
  std::vector<CovariateDecl> covariates;
  std::optional<std::string> response;
  std::optional<std::string> weight;
};

// A validated, immutable sample. Membership in a NonProbabilityB sample is
// what the inclusion indicator means; it is never stored.
class SurveySample {
 public:
  struct Parts {
    SampleKind kind = SampleKind::NonProbabilityB;
    std::vector<std::string> covariate_names;
    Eigen::MatrixXd covariates;
    std::optional<std::string> response_name;
    std::optional<Eigen::VectorXd> response;
    std::optional<std::string> weight_name;
    std::optional<Eigen::VectorXd> weights;
    std::vector<CovariateDecl> encoding;
    std::optional<csv::Table> raw;
  };

  explicit SurveySample(Parts parts);

  static SurveySample probability(std::vector<std::string> covariate_names, Eigen::MatrixXd covariates,
                                  Eigen::VectorXd weights, std::string weight_name = "w");
  static SurveySample nonprobability(std::vector<std::string> covariate_names, Eigen::MatrixXd covariates,
                                     Eigen::VectorXd response, std::string response_name = "y");

  SampleKind kind() const noexcept { return parts_.kind; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(parts_.covariates.rows()); }

  const std::vector<std::string>& covariate_names() const noexcept { return parts_.covariate_names; }
  const Eigen::MatrixXd& covariates() const noexcept { return parts_.covariates; }
  const std::vector<CovariateDecl>& encoding() const noexcept { return parts_.encoding; }

  bool has_response() const noexcept { return parts_.response.has_value(); }
  bool has_weights() const noexcept { return parts_.weights.has_value(); }
  const Eigen::VectorXd& response() const;
  const Eigen::VectorXd& weights() const;
  const std::optional<std::string>& response_name() const noexcept { return parts_.response_name; }
  const std::optional<std::string>& weight_name() const noexcept { return parts_.weight_name; }

  // The source table as read from disk, when the sample came from a file.
  const std::optional<csv::Table>& raw() const noexcept { return parts_.raw; }

  // A copy carrying an additional (e.g. gold-standard) response column.
  SurveySample with_response(Eigen::VectorXd response, std::string response_name) const;

 private:
  Parts parts_;
};

struct SrsWithoutReplacement {
  double population_size = 0.0;
};
struct PpsWithReplacement {};
// Pair-indexed inclusion probabilities for the rows of sample A, pi(i, i)
// being the first-order probability of unit i.
struct JointProbabilities {
  Eigen::MatrixXd pi;
};

struct DesignSpec {
  std::variant<SrsWithoutReplacement, PpsWithReplacement, JointProbabilities> design = PpsWithReplacement{};
  std::optional<double> population_size;

  static DesignSpec srs(double population_size);
  static DesignSpec ppswr(std::optional<double> population_size = std::nullopt);
  static DesignSpec joint(Eigen::MatrixXd pi, std::optional<double> population_size = std::nullopt);

  bool provides_joint_probabilities() const noexcept;
  std::optional<double> known_population_size() const noexcept;

  // Throws InvalidArgument when the design is inconsistent with a sample of
  // n_a units.
  void validate(std::size_t n_a) const;

  // Only valid when provides_joint_probabilities().
  double first_order(std::size_t i, std::size_t n_a) const;
  double second_order(std::size_t i, std::size_t j, std::size_t n_a) const;
};

struct DesignMatrix {
  Eigen::MatrixXd values;
  bool intercept_included = false;
  std::vector<std::string> column_names;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

SurveySample load_sample(const std::filesystem::path& path, const SampleSchema& schema, SampleKind kind);
SurveySample load_sample(const csv::Table& table, const SampleSchema& schema, SampleKind kind);

// Writes the source table verbatim when present, otherwise the numeric
// columns (covariates, response, weight) at round-trip precision.
csv::Table sample_table(const SurveySample& sample);
void write_sample(const SurveySample& sample, const std::filesystem::path& path);

// `covariates` may name expanded indicator columns or a categorical source
// column, which selects all of its indicators. Order is the request order.
DesignMatrix build_design_matrix(const SurveySample& sample, const std::vector<std::string>& covariates,
                                 bool intercept);

// N-hat = sum of the design weights.
double estimate_population_size(const SurveySample& sample_a);

}  // namespace massimpute
