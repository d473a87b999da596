#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfnet/config.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/experiment.hpp"

namespace fs = std::filesystem;
using namespace mfnet;

namespace {

struct CommonArgs {
  std::string preset;
  std::string config;
  std::optional<double> scale;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  std::vector<std::string> sets;
  bool force = false;
  std::string resume;
  std::string checkpoint;
};

fs::path preset_path(const std::string& name) {
  if (fs::exists(name)) return name;
  const fs::path p = fs::path(MFNET_PRESET_DIR) / (name + ".cfg");
  if (!fs::exists(p)) throw ValidationError("unknown preset '" + name + "' (looked for " + p.string() + ")");
  return p;
}

void add_common(CLI::App* sub, CommonArgs& a, bool resume, bool checkpoint) {
  sub->add_option("--preset", a.preset, "Preset name (paper-rbf-d5, paper-sigmoid-d10, desk-quench-d10) or file");
  sub->add_option("--config", a.config, "Key = value config file, applied after the preset");
  sub->add_option("--scale", a.scale, "Multiply step counts by this factor for desk runs");
  sub->add_option("--seed", a.seed, "Master seed");
  sub->add_option("--out", a.out, "Output directory");
  sub->add_option("--threads", a.threads, "OpenMP threads (0 = default)");
  sub->add_option("--set", a.sets, "Override one config key: --set key=value (repeatable)");
  sub->add_flag("--force", a.force, "Continue despite config-hash mismatches");
  if (resume) sub->add_option("--resume", a.resume, "Resume a single-cell run from a checkpoint");
  if (checkpoint) sub->add_option("--checkpoint", a.checkpoint, "Slice this checkpoint instead of training");
}

// Builds the spec: subcommand defaults < preset < config file < --set < --seed/--out, then --scale.
ExperimentSpec build_spec(const std::string& command, const CommonArgs& a) {
  ExperimentSpec spec;
  std::string preset = a.preset;
  if (preset.empty() && a.config.empty()) {
    if (command == "scale") preset = "paper-rbf-d5";
    if (command == "quench") preset = "desk-quench-d10";
  }
  if (!preset.empty()) spec = ExperimentSpec::load(preset_path(preset));
  if (!a.config.empty()) spec.apply(parse_key_values([&] {
    std::ifstream is(a.config);
    if (!is) throw ValidationError("cannot read config " + a.config);
    return std::string(std::istreambuf_iterator<char>(is), {});
  }()));

  if (command == "scale" && spec.experiment != ExperimentKind::SigmoidScaling) spec.experiment = ExperimentKind::RbfScaling;
  else if (command == "quench") spec.experiment = ExperimentKind::Quench;
  else if (command == "slice") spec.experiment = ExperimentKind::Slice;
  else if (command == "clt-check") spec.experiment = ExperimentKind::CltCheck;
  else if (command == "gradcheck") spec.experiment = ExperimentKind::GradCheck;

  std::map<std::string, std::string> kv;
  for (const auto& s : a.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  spec.apply(kv);
  if (a.seed) spec.master_seed = *a.seed;
  if (!a.out.empty()) spec.out = a.out;
  if (a.scale) spec.rescale(*a.scale);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mfnet: mean-field particle training of shallow networks on spherical 3-spin targets"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string merge_dir;
  bool merge_force = false;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "Run the configured training experiment"},
      {"scale", "Error-scaling study over the n grid"},
      {"quench", "SGD run with a late batch-size increase"},
      {"slice", "Evaluate target and network on a slice of the sphere"},
      {"clt-check", "Compare n Var f_n(x) at initialization with its prediction"},
      {"gradcheck", "Finite-difference check of all analytic gradients"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), args, name == "train", name == "slice");

  auto* merge = app.add_subcommand("merge", "Aggregate run reports in a directory into summary.json");
  merge->add_option("dir", merge_dir, "Directory holding run_*.csv")->required();
  merge->add_flag("--force", merge_force, "Merge reports from different configs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "merge") {
    try {
      const auto summary = merge_reports(merge_dir, merge_force);
      std::cout << "merged " << summary["runs"].get<int>() << " reports into "
                << (fs::path(merge_dir) / "summary.json").string() << "\n";
      return kExitOk;
    } catch (const ValidationError& e) {
      write_error_report(merge_dir, kExitValidation, "validation", e.what(), std::cerr);
      return kExitValidation;
    } catch (const std::exception& e) {
      write_error_report(merge_dir, kExitRuntime, "runtime", e.what(), std::cerr);
      return kExitRuntime;
    }
  }

  ExperimentSpec spec;
  try {
    spec = build_spec(command, args);
  } catch (const std::exception& e) {
    write_error_report(args.out.empty() ? spec.out : args.out, kExitValidation, "validation", e.what(), std::cerr);
    return kExitValidation;
  }
  RunOptions opt;
  opt.threads = args.threads;
  opt.force = args.force;
  if (!args.resume.empty()) opt.resume = args.resume;
  if (!args.checkpoint.empty()) opt.checkpoint = args.checkpoint;
  return run_experiment(spec, opt, std::cout);
}
