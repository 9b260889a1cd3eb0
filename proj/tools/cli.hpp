#pragma once

// Subcommands of the fibrefix tool. Each returns the process exit code and
// writes its files under RunConfig::out.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace fibrefix::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,        // I/O, malformed file, schema or range error
  kNonConvergence = 2,    // some fibre did not converge, or the fixed point is not unique
  kHypothesisViolated = 3,
  kNotWitnessed = 4,      // finished, but some hypothesis was only inconclusive or forced
};

struct RunConfig {
  std::string subcommand;
  std::filesystem::path problem;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
  std::optional<double> eps;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::filesystem::path out = ".";
  std::optional<std::size_t> atom;
  std::size_t threads = 1;
  int verbosity = 0;
  // generate only
  std::size_t atoms = 4;
  std::size_t dim = 2;
};

/// Worker count: hardware concurrency capped by FIBREFIX_THREADS when set.
/// Throws std::invalid_argument for a malformed value.
std::size_t threads_from_env();

int cmd_solve(const RunConfig& config, std::ostream& log);
int cmd_verify(const RunConfig& config, std::ostream& log);
int cmd_diagnose(const RunConfig& config, std::ostream& log);
int cmd_generate(const RunConfig& config, std::ostream& log);

/// Parses argv and dispatches. Output paths and codes as documented in the
/// README.
int run(int argc, char** argv);

}  // namespace fibrefix::cli
