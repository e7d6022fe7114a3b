#pragma once

// Command implementations behind the command-line tool: exhaustive scans,
// theory curve tabulation, synthetic validation, and measurement analysis.
// Each run writes its outputs plus a JSON manifest recording the effective
// configuration (seed included), so a run can be reproduced from its manifest.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rankshift/synthetic.hpp"

namespace rankshift {

inline constexpr const char* kVersion = "0.1.0";

// Process exit codes shared by all subcommands.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 1;      // bad flags or flag combinations
inline constexpr int kExitIo = 2;         // unreadable/malformed inputs
inline constexpr int kExitThreshold = 3;  // a validation criterion failed

// Flag-level misuse (missing required flags, inconsistent combinations).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  // shared
  std::string out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed;

  // vector data (scan)
  std::string dataset_path;
  std::string queries_path;
  std::string format = "fvecs";
  bool exclude_self_matches = false;
  std::string topk_format = "csv";  // or "bin"

  // rank pair and normalization target
  int k_t = 10;
  int k_x = 100;
  double lid0 = 10.0;

  // synthetic law and sweep (validate)
  std::string law = "power:10";
  std::vector<std::int64_t> n_sweep = {100, 1000, 10000};
  std::size_t replicates = 100000;
  std::optional<double> assume_lid;  // override the reference index (negative control)

  // theory curve family
  std::vector<double> lids;

  // analyze
  std::string profiles_path;  // top-k file produced by scan
  double bin_width = 5.0;
};

// "power:<ell>" or "chi:<dim>".  Throws UsageError on anything else.
DistanceLaw parse_law(const std::string& text);

// Subcommand bodies; they throw on failure.  Returned code is kExitSuccess
// or kExitThreshold (validate).
int run_scan(const RunConfig& config);
int run_theory(const RunConfig& config);
int run_validate(const RunConfig& config);
int run_analyze(const RunConfig& config);

// Runs a subcommand by name and maps exceptions onto process exit codes.
int dispatch(const std::string& command, const RunConfig& config);

}  // namespace rankshift
