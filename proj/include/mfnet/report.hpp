#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mfnet {

/// One probe of a training run. Losses not measured at a probe are NaN.
struct ReportRow {
  std::int64_t step = 0;
  double time = 0.0;  // step * dt
  int batch_size = 0;
  double temperature = 0.0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double signed_plus = 0.0;
  double signed_minus = 0.0;
  double signed_gap = 0.0;  // |plus + minus - restricted residual mean|
  double exact_loss = 0.0;
  double sphere_dev = 0.0;

  bool operator==(const ReportRow&) const = default;
};

/// Time series of one (n, realization, seed) run.
///
/// CSV layout (schema v1):
///   # mfnet-report v1
///   # key=value            one line per meta entry, sorted by key
///   step,time,batch_size,temperature,train_loss,eval_loss,signed_error_plus,
///   signed_error_minus,signed_identity_gap,exact_rbf_loss,max_sphere_dev
///   ...rows, shortest round-trip decimal formatting
struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  std::map<std::string, std::string> meta;
  std::vector<ReportRow> series;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  static ExperimentReport from_csv(const std::string& text);
  static ExperimentReport read_csv(const std::filesystem::path& path);
};

std::string format_double(double v);

}  // namespace mfnet
