#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "losstomo/estimators.hpp"

namespace losstomo::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kCapacityError = 3,
};

enum class Format { Csv, Json };

struct ExperimentConfig {
  std::string tree_path;
  std::optional<double> alpha;  // uniform override of the tree file's rates
  std::size_t probes = 1000;
  std::uint64_t seed = 1;
  std::size_t replications = 100;
  std::vector<Method> methods{Method{}};
  Format format = Format::Csv;
  std::string output_path;  // empty = stdout

  // Throws ConfigError on n < 1, R < 1, no methods, alpha outside [0, 1] or
  // a tree file that does not exist.
  void validate() const;
};

// Entry point of the `losstomo` tool. Subcommands: simulate, estimate,
// analyze, mc, reproduce-example. Returns an ExitCode; diagnostics go to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace losstomo::cli
