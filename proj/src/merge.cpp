#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "mfnet/diagnostics.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/experiment.hpp"
#include "mfnet/report.hpp"

namespace fs = std::filesystem;

namespace mfnet {

namespace {

struct RunEntry {
  std::string file;
  int n = 0;
  int realization = 0;
  int seed_index = 0;
  double final_loss = 0.0;
  ExperimentReport report;
};

int meta_int(const ExperimentReport& r, const std::string& key, const std::string& file) {
  const auto it = r.meta.find(key);
  if (it == r.meta.end()) throw ValidationError(file + ": missing meta key '" + key + "'");
  return std::stoi(it->second);
}

std::string meta_or(const ExperimentReport& r, const std::string& key, const std::string& fallback = "") {
  const auto it = r.meta.find(key);
  return it == r.meta.end() ? fallback : it->second;
}

}  // namespace

nlohmann::json merge_reports(const fs::path& dir, bool force) {
  if (!fs::is_directory(dir)) throw ValidationError("merge: not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& ent : fs::directory_iterator(dir)) {
    const std::string name = ent.path().filename().string();
    if (ent.is_regular_file() && name.rfind("run_", 0) == 0 && ent.path().extension() == ".csv") files.push_back(ent.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<RunEntry> runs;
  for (const auto& f : files) {
    RunEntry e;
    e.file = f.filename().string();
    e.report = ExperimentReport::read_csv(f);
    if (e.report.series.empty()) continue;
    e.n = meta_int(e.report, "n", e.file);
    e.realization = meta_int(e.report, "realization", e.file);
    e.seed_index = meta_int(e.report, "seed_index", e.file);
    e.final_loss = e.report.series.back().eval_loss;
    runs.push_back(std::move(e));
  }
  if (runs.empty()) throw ValidationError("merge: no valid run_*.csv reports in " + dir.string());

  std::set<std::string> hashes, seeds;
  for (const auto& r : runs) {
    hashes.insert(meta_or(r.report, "config_hash", "unknown"));
    seeds.insert(meta_or(r.report, "master_seed", "unknown"));
  }
  if (hashes.size() > 1 && !force)
    throw ValidationError("merge: reports come from different configs (hashes differ); use --force to merge anyway");

  nlohmann::json summary;
  summary["schema"] = "mfnet-summary";
  summary["version"] = 1;
  if (hashes.size() == 1) summary["config_hash"] = *hashes.begin();
  else summary["config_hashes"] = std::vector<std::string>(hashes.begin(), hashes.end());
  if (seeds.size() == 1) summary["master_seed"] = *seeds.begin();
  else summary["master_seeds"] = std::vector<std::string>(seeds.begin(), seeds.end());
  summary["experiment"] = meta_or(runs.front().report, "experiment");
  summary["unit"] = meta_or(runs.front().report, "unit");
  summary["runs"] = runs.size();

  std::map<int, std::vector<const RunEntry*>> by_n;
  for (const auto& r : runs) by_n[r.n].push_back(&r);

  std::vector<ScalingPoint> points;
  bool all_positive = true;
  double max_gap = 0.0;
  nlohmann::json per_n = nlohmann::json::array();
  for (const auto& [n, group] : by_n) {
    double sum = 0.0;
    for (const auto* r : group) sum += r->final_loss;
    const double k = static_cast<double>(group.size());
    const double mean = sum / k;
    double ss = 0.0;
    for (const auto* r : group) ss += (r->final_loss - mean) * (r->final_loss - mean);
    const double sem = group.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;

    nlohmann::json entry{{"n", n}, {"runs", group.size()}, {"mean_loss", mean}, {"sem", sem}};
    nlohmann::json losses = nlohmann::json::array();
    std::map<int, std::pair<double, int>> per_real;
    for (const auto* r : group) {
      losses.push_back({{"realization", r->realization}, {"seed_index", r->seed_index}, {"eval_loss", r->final_loss},
                        {"file", r->file}});
      per_real[r->realization].first += r->final_loss;
      per_real[r->realization].second += 1;
    }
    nlohmann::json realizations = nlohmann::json::array();
    for (const auto& [real, acc] : per_real)
      realizations.push_back({{"realization", real}, {"mean_loss", acc.first / acc.second}});
    entry["losses"] = losses;
    entry["per_realization"] = realizations;
    per_n.push_back(entry);

    if (!(mean > 0.0) || !std::isfinite(mean)) all_positive = false;
    points.push_back({static_cast<double>(n), mean, sem});
  }
  for (const auto& r : runs)
    for (const auto& row : r.report.series)
      if (std::isfinite(row.signed_gap)) max_gap = std::max(max_gap, row.signed_gap);

  summary["per_n"] = per_n;
  summary["max_signed_identity_gap"] = max_gap;

  bool decreasing = true;
  for (std::size_t k = 1; k < points.size(); ++k) decreasing = decreasing && points[k].mean_loss < points[k - 1].mean_loss;
  summary["strictly_decreasing"] = decreasing;

  if (points.size() >= 3 && all_positive) {
    const SlopeFit fit = fit_scaling_slope(points);
    summary["slope"] = {{"value", fit.slope}, {"stderr", fit.stderr_}, {"intercept", fit.intercept},
                        {"weighted", fit.weighted}};
  }

  nlohmann::json quench = nlohmann::json::array();
  for (const auto& r : runs) {
    if (!r.report.meta.count("quench_std_ratio")) continue;
    quench.push_back({{"n", r.n},
                      {"realization", r.realization},
                      {"seed_index", r.seed_index},
                      {"quench_step", std::stoll(meta_or(r.report, "quench_step"))},
                      {"pre_std", std::stod(meta_or(r.report, "quench_pre_std"))},
                      {"post_std", std::stod(meta_or(r.report, "quench_post_std"))},
                      {"ratio", std::stod(meta_or(r.report, "quench_std_ratio"))}});
  }
  if (!quench.empty()) summary["quench"] = quench;

  std::ofstream os(dir / "summary.json", std::ios::binary);
  if (!os) throw Error("merge: cannot write summary.json");
  os << summary.dump(2) << "\n";
  return summary;
}

}  // namespace mfnet
