#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfnet/diagnostics.hpp"
#include "mfnet/dynamics.hpp"
#include "mfnet/unit.hpp"

namespace mfnet {

enum class ExperimentKind { RbfScaling, SigmoidScaling, Quench, Slice, CltCheck, GradCheck };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

/// Schedule entry as written in a config. `at` is a step index or, when
/// `percent` is set, a percentage of the total steps. Batch sizes may depend on
/// n: "12", "n/5" = floor(n/5), "(n/5)^2" = floor((n/5)^2), "floor(n/5)^2".
struct ScheduleTerm {
  std::int64_t at = 0;
  bool percent = false;
  std::string value;

  bool operator==(const ScheduleTerm&) const = default;
};

/// A complete experiment definition. Serialized as a flat "key = value" file;
/// text -> spec -> text is lossless.
struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::RbfScaling;
  std::string unit = "rbf";  // rbf | sigmoid
  int d = 5;
  double alpha = 1.0;
  std::vector<int> n_list{16, 32, 64, 128};
  int realizations = 1;
  int seeds = 1;
  std::uint64_t master_seed = 1;

  double dt = 1e-3;
  std::int64_t steps = 1000;
  Dynamics dynamics = Dynamics::Gd;
  std::vector<ScheduleTerm> batch_schedule;
  std::vector<ScheduleTerm> noise_schedule;
  double beta = std::numeric_limits<double>::infinity();
  std::string c_init = "zero";    // zero | uniform:LO:HI | normal:STD; LO/HI may carry "*d" or "*d^2"
  std::string z_init = "uniform"; // uniform | planted
  double prior_c_std = 1.0;
  double prior_z_std = 1.0;

  int eval_batch = 100000;
  int probes = 10;          // probe rows per run, in addition to the final state
  bool trace = false;       // write per-step loss traces
  double quench_window = 0.05;

  std::string slice = "two-angle";  // two-angle | great-circle:I:J
  int slice_resolution = 64;

  int clt_n = 100;
  int clt_seeds = 1000;
  std::int64_t clt_mc_draws = 1000000;

  int gradcheck_cases = 100;

  std::string out = "out";

  bool operator==(const ExperimentSpec&) const = default;

  /// Throws ValidationError on any inconsistency.
  void validate() const;

  Unit make_unit() const;
  InitSpec init_spec() const;
  SliceSpec slice_spec() const;
  /// Training configuration for width n; schedules resolved against n and steps.
  TrainConfig train_config(int n, std::uint64_t run_seed) const;
  /// Step at which the last batch-size increase happens, if any.
  std::optional<std::int64_t> quench_step(int n) const;

  /// Canonical text, every key, fixed order.
  std::string to_text() const;
  /// 16 hex digits of FNV-1a over to_text() without the output directory.
  std::string config_hash() const;

  static ExperimentSpec parse(const std::string& text);
  static ExperimentSpec load(const std::filesystem::path& path);
  /// Applies "key = value" pairs on top of this spec.
  void apply(const std::map<std::string, std::string>& overrides);
  /// Shrinks steps (and absolute schedule indices) by `factor`.
  void rescale(double factor);
};

std::map<std::string, std::string> parse_key_values(const std::string& text);

/// Seed of one grid cell, distinct for every (n, realization, seed index).
std::uint64_t cell_seed(std::uint64_t master_seed, int n, int realization, int seed_index);

}  // namespace mfnet
