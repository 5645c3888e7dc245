#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvdwls/estimator.hpp"
#include "mvdwls/simlab.hpp"

namespace mvdwls::cli {

/// Process exit codes, one per error family.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitUsage = 2,
  kExitInput = 3,
  kExitData = 4,
  kExitEstimation = 5,
};

int exit_code_for(const Error& e) noexcept;

struct CliConfig {
  /// Header name, or a 0-based column index. Empty selects the last column.
  std::string response_column;
  /// Header names or 0-based indices. Empty selects every other column.
  std::vector<std::string> feature_columns;
  /// z-score the response and scale features to unit standard deviation.
  bool standardize = false;
  /// Backward AIC selection of features before fitting.
  bool stepwise = false;
  SolverConfig solver;
  std::optional<std::filesystem::path> output_dir;
  std::uint64_t seed = 0;
};

/// Affine maps applied at load time. Predictions on the analysis scale map
/// back as y = y_mean + y_sd * y_analysis.
struct Standardization {
  bool applied = false;
  double y_mean = 0.0;
  double y_sd = 1.0;
  std::vector<double> feature_sd;
};

struct LoadedData {
  Dataset data;
  Standardization transform;
};

LoadedData load_csv(const std::filesystem::path& path, const CliConfig& config);

/// Writes the dataset as CSV: regressor columns then the response, full precision.
void write_csv(const Dataset& data, const std::filesystem::path& path);

/// The directory a command writes into; timestamped when none was requested.
std::filesystem::path resolve_output_dir(const CliConfig& config, const std::string& command);

struct FitOutputs {
  std::filesystem::path report_json;
  std::filesystem::path overlay_svg;
  std::string json;  // contents of report_json
};

FitOutputs cmd_fit(const std::filesystem::path& input, const CliConfig& config, std::ostream& console);

struct SimulateOptions {
  std::optional<int> scenario;  // 1..3; empty with all == true
  bool all = false;
  int n = 90;
  int replications = 100;
};

std::vector<simlab::SimReport> cmd_simulate(const SimulateOptions& options, const CliConfig& config,
                                            std::ostream& console);

simlab::CvReport cmd_crossval(const std::filesystem::path& input, int repeats, const CliConfig& config,
                              std::ostream& console);

}  // namespace mvdwls::cli
