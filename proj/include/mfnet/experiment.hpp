#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfnet/config.hpp"

namespace mfnet {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2 };

struct RunOptions {
  int threads = 0;  // 0 -> OpenMP default
  bool force = false;
  /// Continue a single-cell run from this checkpoint (training experiments).
  std::optional<std::filesystem::path> resume;
  /// Slice an existing checkpoint instead of training one.
  std::optional<std::filesystem::path> checkpoint;
};

/// Seed of tensor realization r.
std::uint64_t tensor_seed(std::uint64_t master_seed, int realization);

/// Per-(d, check) worst relative error of analytic gradients against central
/// differences with h = 1e-5.
struct GradCheckEntry {
  std::string check;  // spin3 | rbf | sigmoid
  int d = 0;
  int cases = 0;
  double max_rel_error = 0.0;
};
std::vector<GradCheckEntry> run_gradcheck(std::uint64_t master_seed, int cases,
                                          const std::vector<int>& dims = {2, 5, 10, 25});

/// Validates and runs the experiment, writing artifacts under spec.out.
/// Returns an ExitCode; errors are also written to <out>/error.json.
int run_experiment(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log);

/// Writes the machine-readable error report and echoes it to `err`.
void write_error_report(const std::filesystem::path& out_dir, int code, const std::string& kind,
                        const std::string& message, std::ostream& err);

/// Aggregates run_*.csv files in `dir` into <dir>/summary.json and returns it.
/// Byte-identical on repeated calls. Refuses reports with different config
/// hashes unless `force`.
nlohmann::json merge_reports(const std::filesystem::path& dir, bool force = false);

}  // namespace mfnet
