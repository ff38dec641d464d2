#include "massimpute/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "massimpute/errors.hpp"

namespace massimpute {

namespace {

void require_finite(const Eigen::Ref<const Eigen::MatrixXd>& values, const std::string& what) {
  if (!values.allFinite()) throw Error(ErrorKind::NonNumericValue, what + " contains non-finite values");
}

std::string indicator_name(const CovariateDecl& decl, const std::string& level) {
  return decl.name + "=" + level;
}

}  // namespace

SurveySample::SurveySample(Parts parts) : parts_(std::move(parts)) {
  const auto n = parts_.covariates.rows();
  const auto q = parts_.covariates.cols();
  if (static_cast<std::size_t>(q) != parts_.covariate_names.size()) {
    throw Error(ErrorKind::DimensionMismatch, "covariate names do not match covariate columns");
  }
  require_finite(parts_.covariates, "covariates");
  if (parts_.response) {
    if (parts_.response->size() != n) throw Error(ErrorKind::DimensionMismatch, "response length");
    require_finite(*parts_.response, "response");
  }
  if (parts_.weights) {
    if (parts_.weights->size() != n) throw Error(ErrorKind::DimensionMismatch, "weight length");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = (*parts_.weights)(i);
      if (!std::isfinite(w) || w <= 0.0) {
        throw Error(ErrorKind::NonPositiveWeight, "row " + std::to_string(i + 1));
      }
    }
  }
  if (parts_.kind == SampleKind::ProbabilityA && !parts_.weights) {
    throw Error(ErrorKind::MissingColumn, parts_.weight_name.value_or("weight"));
  }
  if (parts_.kind == SampleKind::NonProbabilityB && !parts_.response) {
    throw Error(ErrorKind::MissingColumn, parts_.response_name.value_or("response"));
  }
  if (n < q + 1) {
    throw Error(ErrorKind::InvalidArgument, "sample has " + std::to_string(n) + " rows but " +
                                                std::to_string(q) + " covariate columns");
  }
}

SurveySample SurveySample::probability(std::vector<std::string> covariate_names, Eigen::MatrixXd covariates,
                                       Eigen::VectorXd weights, std::string weight_name) {
  Parts parts;
  parts.kind = SampleKind::ProbabilityA;
  parts.covariate_names = std::move(covariate_names);
  parts.covariates = std::move(covariates);
  parts.weights = std::move(weights);
  parts.weight_name = std::move(weight_name);
  return SurveySample(std::move(parts));
}

SurveySample SurveySample::nonprobability(std::vector<std::string> covariate_names, Eigen::MatrixXd covariates,
                                          Eigen::VectorXd response, std::string response_name) {
  Parts parts;
  parts.kind = SampleKind::NonProbabilityB;
  parts.covariate_names = std::move(covariate_names);
  parts.covariates = std::move(covariates);
  parts.response = std::move(response);
  parts.response_name = std::move(response_name);
  return SurveySample(std::move(parts));
}

const Eigen::VectorXd& SurveySample::response() const {
  if (!parts_.response) throw Error(ErrorKind::MissingColumn, parts_.response_name.value_or("response"));
  return *parts_.response;
}

const Eigen::VectorXd& SurveySample::weights() const {
  if (!parts_.weights) throw Error(ErrorKind::MissingColumn, parts_.weight_name.value_or("weight"));
  return *parts_.weights;
}

SurveySample SurveySample::with_response(Eigen::VectorXd response, std::string response_name) const {
  Parts parts = parts_;
  parts.response = std::move(response);
  parts.response_name = std::move(response_name);
  return SurveySample(std::move(parts));
}

DesignSpec DesignSpec::srs(double population_size) {
  DesignSpec spec;
  spec.design = SrsWithoutReplacement{population_size};
  spec.population_size = population_size;
  return spec;
}

DesignSpec DesignSpec::ppswr(std::optional<double> population_size) {
  DesignSpec spec;
  spec.design = PpsWithReplacement{};
  spec.population_size = population_size;
  return spec;
}

DesignSpec DesignSpec::joint(Eigen::MatrixXd pi, std::optional<double> population_size) {
  DesignSpec spec;
  spec.design = JointProbabilities{std::move(pi)};
  spec.population_size = population_size;
  return spec;
}

bool DesignSpec::provides_joint_probabilities() const noexcept {
  return !std::holds_alternative<PpsWithReplacement>(design);
}

std::optional<double> DesignSpec::known_population_size() const noexcept {
  if (population_size) return population_size;
  if (const auto* srs = std::get_if<SrsWithoutReplacement>(&design)) return srs->population_size;
  return std::nullopt;
}

void DesignSpec::validate(std::size_t n_a) const {
  if (population_size && !(*population_size > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "population size must be positive");
  }
  if (const auto* srs = std::get_if<SrsWithoutReplacement>(&design)) {
    if (!(srs->population_size >= static_cast<double>(n_a)) || n_a == 0) {
      throw Error(ErrorKind::InvalidArgument, "SRS population size " + std::to_string(srs->population_size) +
                                                  " is smaller than the sample size " + std::to_string(n_a));
    }
  } else if (const auto* joint = std::get_if<JointProbabilities>(&design)) {
    const auto& pi = joint->pi;
    if (static_cast<std::size_t>(pi.rows()) != n_a || static_cast<std::size_t>(pi.cols()) != n_a) {
      throw Error(ErrorKind::DimensionMismatch, "joint probability table must be n_A x n_A");
    }
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
      for (Eigen::Index j = 0; j < pi.cols(); ++j) {
        const double p = pi(i, j);
        if (!(p > 0.0 && p <= 1.0)) {
          throw Error(ErrorKind::InvalidArgument, "joint probability outside (0,1] at (" + std::to_string(i + 1) +
                                                      "," + std::to_string(j + 1) + ")");
        }
        if (p != pi(j, i)) throw Error(ErrorKind::InvalidArgument, "joint probability table is not symmetric");
      }
    }
  }
}

double DesignSpec::first_order(std::size_t i, std::size_t n_a) const {
  if (const auto* srs = std::get_if<SrsWithoutReplacement>(&design)) {
    return static_cast<double>(n_a) / srs->population_size;
  }
  if (const auto* joint = std::get_if<JointProbabilities>(&design)) {
    const auto k = static_cast<Eigen::Index>(i);
    return joint->pi(k, k);
  }
  throw Error(ErrorKind::MissingJointProbabilities, "design has no inclusion probabilities");
}

double DesignSpec::second_order(std::size_t i, std::size_t j, std::size_t n_a) const {
  if (i == j) return first_order(i, n_a);
  if (const auto* srs = std::get_if<SrsWithoutReplacement>(&design)) {
    const double n = static_cast<double>(n_a);
    const double N = srs->population_size;
    return n * (n - 1.0) / (N * (N - 1.0));
  }
  if (const auto* joint = std::get_if<JointProbabilities>(&design)) {
    return joint->pi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  throw Error(ErrorKind::MissingJointProbabilities, "design has no joint inclusion probabilities");
}

SurveySample load_sample(const std::filesystem::path& path, const SampleSchema& schema, SampleKind kind) {
  return load_sample(csv::read(path), schema, kind);
}

SurveySample load_sample(const csv::Table& table, const SampleSchema& schema, SampleKind kind) {
  if (table.rows.empty()) throw Error(ErrorKind::EmptyFile, "no data rows");

  if (kind == SampleKind::ProbabilityA && !schema.weight) {
    throw Error(ErrorKind::InvalidArgument, "a probability sample needs a declared weight column");
  }
  if (kind == SampleKind::NonProbabilityB && !schema.response) {
    throw Error(ErrorKind::InvalidArgument, "a non-probability sample needs a declared response column");
  }

  auto locate = [&table](const std::string& name) {
    auto idx = table.find(name);
    if (!idx) throw Error(ErrorKind::MissingColumn, name);
    return *idx;
  };

  std::vector<std::size_t> cov_index;
  for (const auto& decl : schema.covariates) cov_index.push_back(locate(decl.name));
  std::optional<std::size_t> response_index;
  std::optional<std::size_t> weight_index;
  if (schema.response) response_index = locate(*schema.response);
  if (schema.weight) weight_index = locate(*schema.weight);

  const std::size_t n = table.rows.size();

  auto numeric = [&table](std::size_t row, std::size_t col) {
    auto v = csv::parse_double(table.rows[row][col]);
    if (!v) {
      throw Error(ErrorKind::NonNumericValue,
                  "column " + table.header[col] + ", row " + std::to_string(row + 1) + ": '" +
                      table.rows[row][col] + "'");
    }
    return *v;
  };

  // Resolve encodings and output column layout.
  std::vector<CovariateDecl> encoding = schema.covariates;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < encoding.size(); ++c) {
    auto& decl = encoding[c];
    if (!decl.categorical) {
      names.push_back(decl.name);
      continue;
    }
    if (decl.levels.empty()) {
      std::set<std::string> seen;
      for (std::size_t r = 0; r < n; ++r) seen.insert(table.rows[r][cov_index[c]]);
      decl.levels.assign(seen.begin(), seen.end());
    }
    if (std::find(decl.levels.begin(), decl.levels.end(), decl.reference_level) == decl.levels.end()) {
      throw Error(ErrorKind::UnknownLevel, "reference level '" + decl.reference_level + "' of column " + decl.name);
    }
    for (const auto& level : decl.levels) {
      if (level != decl.reference_level) names.push_back(indicator_name(decl, level));
    }
  }

  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < n; ++r) {
    Eigen::Index out = 0;
    for (std::size_t c = 0; c < encoding.size(); ++c) {
      const auto& decl = encoding[c];
      if (!decl.categorical) {
        X(static_cast<Eigen::Index>(r), out++) = numeric(r, cov_index[c]);
        continue;
      }
      const std::string& value = table.rows[r][cov_index[c]];
      if (value.empty()) {
        throw Error(ErrorKind::NonNumericValue, "column " + decl.name + ", row " + std::to_string(r + 1) + ": missing");
      }
      if (std::find(decl.levels.begin(), decl.levels.end(), value) == decl.levels.end()) {
        throw Error(ErrorKind::UnknownLevel,
                    "column " + decl.name + ", row " + std::to_string(r + 1) + ": '" + value + "'");
      }
      for (const auto& level : decl.levels) {
        if (level == decl.reference_level) continue;
        X(static_cast<Eigen::Index>(r), out++) = (value == level) ? 1.0 : 0.0;
      }
    }
  }

  SurveySample::Parts parts;
  parts.kind = kind;
  parts.covariate_names = std::move(names);
  parts.covariates = std::move(X);
  parts.encoding = std::move(encoding);
  parts.raw = table;

  if (response_index) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) y(static_cast<Eigen::Index>(r)) = numeric(r, *response_index);
    parts.response = std::move(y);
    parts.response_name = schema.response;
  }
  if (weight_index) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      const double v = numeric(r, *weight_index);
      if (!(v > 0.0)) throw Error(ErrorKind::NonPositiveWeight, "row " + std::to_string(r + 1));
      w(static_cast<Eigen::Index>(r)) = v;
    }
    parts.weights = std::move(w);
    parts.weight_name = schema.weight;
  }
  return SurveySample(std::move(parts));
}

csv::Table sample_table(const SurveySample& sample) {
  if (sample.raw()) return *sample.raw();
  csv::Table table;
  table.header = sample.covariate_names();
  if (sample.has_response()) table.header.push_back(sample.response_name().value_or("y"));
  if (sample.has_weights()) table.header.push_back(sample.weight_name().value_or("w"));
  const auto& X = sample.covariates();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    std::vector<std::string> row;
    row.reserve(table.header.size());
    for (Eigen::Index j = 0; j < X.cols(); ++j) row.push_back(csv::format_double(X(i, j)));
    if (sample.has_response()) row.push_back(csv::format_double(sample.response()(i)));
    if (sample.has_weights()) row.push_back(csv::format_double(sample.weights()(i)));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_sample(const SurveySample& sample, const std::filesystem::path& path) {
  csv::write(path, sample_table(sample));
}

DesignMatrix build_design_matrix(const SurveySample& sample, const std::vector<std::string>& covariates,
                                 bool intercept) {
  if (!intercept && covariates.empty()) {
    throw Error(ErrorKind::UnknownCovariate, "empty design: no intercept and no covariates");
  }
  const auto& names = sample.covariate_names();
  std::vector<Eigen::Index> source;
  DesignMatrix dm;
  dm.intercept_included = intercept;
  if (intercept) dm.column_names.emplace_back(kInterceptName);

  for (const auto& requested : covariates) {
    auto it = std::find(names.begin(), names.end(), requested);
    if (it != names.end()) {
      source.push_back(static_cast<Eigen::Index>(it - names.begin()));
      dm.column_names.push_back(requested);
      continue;
    }
    const auto& enc = sample.encoding();
    auto decl = std::find_if(enc.begin(), enc.end(),
                             [&](const CovariateDecl& d) { return d.categorical && d.name == requested; });
    if (decl == enc.end()) throw Error(ErrorKind::UnknownCovariate, requested);
    for (const auto& level : decl->levels) {
      if (level == decl->reference_level) continue;
      const std::string ind = indicator_name(*decl, level);
      auto pos = std::find(names.begin(), names.end(), ind);
      if (pos == names.end()) throw Error(ErrorKind::UnknownCovariate, ind);
      source.push_back(static_cast<Eigen::Index>(pos - names.begin()));
      dm.column_names.push_back(ind);
    }
  }

  const auto n = static_cast<Eigen::Index>(sample.size());
  const Eigen::Index offset = intercept ? 1 : 0;
  dm.values.resize(n, offset + static_cast<Eigen::Index>(source.size()));
  if (intercept) dm.values.col(0).setOnes();
  for (std::size_t k = 0; k < source.size(); ++k) {
    dm.values.col(offset + static_cast<Eigen::Index>(k)) = sample.covariates().col(source[k]);
  }
  return dm;
}

double estimate_population_size(const SurveySample& sample_a) {
  if (sample_a.kind() != SampleKind::ProbabilityA) {
    throw Error(ErrorKind::InvalidArgument, "population size is estimated from a probability sample");
  }
  return sample_a.weights().sum();
}

}  // namespace massimpute
