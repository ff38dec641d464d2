#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace massimpute::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Everything a subcommand can be configured with. Flags, MASSIMPUTE_SEED /
// MASSIMPUTE_THREADS and a --config file all land here.
struct RunConfig {
  std::string subcommand;

  // inputs
  std::string train;
  std::string sample_a;
  std::string model;
  std::string imputed;
  std::string joint_probs;
  std::string replay;

  // columns
  std::string response;
  std::vector<std::string> covariates;
  std::vector<std::string> categorical;  // "column=reference_level"
  std::string weight;
  bool no_intercept = false;

  std::string family = "linear";
  std::string design;
  std::string pop_size = "estimate";
  std::string variance = "none";
  std::string strategy;

  // simulation
  std::string population_model;
  std::size_t n_a = 500;
  std::size_t n_b = 500;
  std::size_t reps = 1000;
  std::size_t boot_l = 500;
  std::size_t population_size = 100000;
  bool timing = false;

  std::size_t L = 0;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  // outputs
  std::string out;
  std::string report;
  std::string per_rep;
};

// Returns the process exit code: 0 success, 2 usage, 3 data validation,
// 4 numerical failure. Errors are written to `err` as one JSON object.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace massimpute::cli
