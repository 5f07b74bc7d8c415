#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <ostream>
#include <string>
#include <vector>

namespace dmera::cli {

inline constexpr const char* kToolVersion = "0.3.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string angles = "auto";  // path, "calibrate" or "auto"
  int depth = 2;
  std::string variant = "C1";
  std::string noise = "noiseless";
  std::string kind = "mixture";
  std::vector<double> grid;
  std::optional<std::uint64_t> seed;
  std::string out_dir;

  int layers = 12;
  int top = 16;
  int n_out = 0;  // 0: channel width
  int post_layers = 10;
  int starts = 32;
  double tol = 0.0;  // 0: table tolerance
  int samples = 16;
  std::vector<int> depths{2, 3, 4};
  std::string initial = "psi1";
  int l_max = 16;
  int trajectories = 500;
  std::vector<int> ells{1, 2, 3};
  std::string scheme = "all";
  int repetitions = 3;
  std::string data;
  std::vector<std::string> observables;

  std::string to_json() const;
};

/// argv[0] is the program name. Throws UsageError with a printable message;
/// `--help` surfaces as UsageError with an empty-exit marker in `help_exit`.
RunConfig parse_args(int argc, const char* const* argv, bool* help_exit = nullptr, std::ostream* help_out = nullptr);

/// Runs the command; returns the process exit status.
int dispatch(const RunConfig& config, std::ostream& out, std::ostream& err);

/// The default output directory: $DMERA_OUTPUT_DIR or "dmera-out".
std::string default_output_dir();

}  // namespace dmera::cli
