#include "mfnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>

#include <fmt/format.h>
#include <omp.h>

#include "mfnet/batch.hpp"
#include "mfnet/checkpoint.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/report.hpp"
#include "mfnet/sphere.hpp"

namespace fs = std::filesystem;

namespace mfnet {

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::string cell_name(int n, int r, int s) { return fmt::format("n{}_r{}_s{}", n, r, s); }

struct Cell {
  int n, r, s;
};

struct CellFailure {
  Cell cell;
  std::int64_t step = -1;
  int particle = -1;
  std::string message;
};

// Relative error of analytic vs central-difference gradient, as vector norms.
template <class F>
double fd_rel_error(F&& f, std::span<const double> at, std::span<const double> analytic) {
  constexpr double h = 1e-5;
  std::vector<double> p(at.begin(), at.end());
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double keep = p[k];
    p[k] = keep + h;
    const double up = f(p);
    p[k] = keep - h;
    const double down = f(p);
    p[k] = keep;
    const double fd = (up - down) / (2.0 * h);
    diff2 += (analytic[k] - fd) * (analytic[k] - fd);
    ref2 += fd * fd;
  }
  return ref2 > 0.0 ? std::sqrt(diff2 / ref2) : std::sqrt(diff2);
}

std::vector<double> windowed(const std::vector<StepTrace>& trace, std::int64_t from, std::int64_t to) {
  std::vector<double> v;
  for (const auto& t : trace)
    if (t.step >= from && t.step < to) v.push_back(t.loss);
  return v;
}

void write_trace(const fs::path& path, const std::vector<StepTrace>& trace, const std::string& hash,
                 std::uint64_t seed) {
  std::string text = fmt::format("# mfnet-trace v1\n# config_hash={}\n# master_seed={}\n", hash, seed);
  text += "step,batch_size,loss,drift_norm2,max_sphere_dev\n";
  for (const auto& t : trace)
    text += fmt::format("{},{},{},{},{}\n", t.step, t.batch_size, format_double(t.loss), format_double(t.drift_norm2),
                        format_double(t.sphere_dev));
  write_text(path, text);
}

bool is_training(ExperimentKind k) {
  return k == ExperimentKind::RbfScaling || k == ExperimentKind::SigmoidScaling || k == ExperimentKind::Quench;
}

class Runner {
 public:
  Runner(const ExperimentSpec& spec, const RunOptions& opt, std::ostream& log)
      : spec_(spec), opt_(opt), log_(log), out_(spec.out), hash_(spec.config_hash()), unit_(spec.make_unit()) {}

  int run() {
    switch (spec_.experiment) {
      case ExperimentKind::GradCheck:
        return gradcheck();
      case ExperimentKind::CltCheck:
        return clt();
      case ExperimentKind::Slice:
        return slice();
      default:
        return grid();
    }
  }

 private:
  const ExperimentSpec& spec_;
  const RunOptions& opt_;
  std::ostream& log_;
  fs::path out_;
  std::string hash_;
  Unit unit_;

  void common_meta(std::map<std::string, std::string>& meta) const {
    meta["config_hash"] = hash_;
    meta["master_seed"] = std::to_string(spec_.master_seed);
    meta["experiment"] = to_string(spec_.experiment);
    meta["unit"] = unit_.name();
    meta["d"] = std::to_string(spec_.d);
  }

  nlohmann::json json_header() const {
    return {{"config_hash", hash_}, {"master_seed", spec_.master_seed}, {"experiment", to_string(spec_.experiment)}};
  }

  SpinTensor tensor(int r) const {
    const SpinTensor t = SpinTensor::random(spec_.d, tensor_seed(spec_.master_seed, r));
    return t;
  }

  Batch eval_points() const {
    return draw_points(spec_.d, spec_.eval_batch, RngStream::derive(spec_.master_seed, StreamRole::EvalBatch, 0));
  }

  DiagnosticPlan plan(const Batch* eval) const {
    DiagnosticPlan p;
    p.eval_batch = eval;
    p.every = spec_.probes > 0 ? std::max<std::int64_t>(1, spec_.steps / spec_.probes) : 0;
    p.step_trace = spec_.trace || spec_.experiment == ExperimentKind::Quench;
    return p;
  }

  ParticleEnsemble initial(int n, std::uint64_t run_seed) const {
    return init_ensemble(spec_.init_spec(), unit_, n, RngStream::derive(run_seed, StreamRole::Init, 0));
  }

  void run_cell(const Cell& cell, const Target& target, const Batch& eval, std::optional<Checkpoint> resume) const {
    const std::uint64_t seed = cell_seed(spec_.master_seed, cell.n, cell.r, cell.s);
    const TrainConfig cfg = spec_.train_config(cell.n, seed);
    std::int64_t start = 0;
    ParticleEnsemble e0 = resume ? resume->ensemble : initial(cell.n, seed);
    if (resume) start = resume->step;

    RunOutput run = run_schedule(cfg, std::move(e0), target, plan(&eval), start);

    ExperimentReport& rep = run.report;
    common_meta(rep.meta);
    rep.meta["n"] = std::to_string(cell.n);
    rep.meta["realization"] = std::to_string(cell.r);
    rep.meta["seed_index"] = std::to_string(cell.s);
    rep.meta["run_seed"] = std::to_string(seed);
    rep.meta["tensor_seed"] = std::to_string(tensor_seed(spec_.master_seed, cell.r));
    rep.meta["start_step"] = std::to_string(start);

    if (spec_.experiment == ExperimentKind::Quench) {
      const std::int64_t q = *spec_.quench_step(cell.n);
      const auto w = static_cast<std::int64_t>(std::floor(spec_.quench_window * static_cast<double>(spec_.steps)));
      const auto pre = windowed(run.trace, q - w, q);
      const auto post = windowed(run.trace, spec_.steps - w, spec_.steps);
      rep.meta["quench_step"] = std::to_string(q);
      rep.meta["quench_window"] = std::to_string(w);
      if (pre.size() >= 2 && post.size() >= 2) {
        const double a = window_stddev(pre), b = window_stddev(post);
        rep.meta["quench_pre_std"] = format_double(a);
        rep.meta["quench_post_std"] = format_double(b);
        rep.meta["quench_std_ratio"] = format_double(b / a);
      }
    }

    const std::string name = cell_name(cell.n, cell.r, cell.s);
    rep.write_csv(out_ / ("run_" + name + ".csv"));
    if (spec_.trace) write_trace(out_ / ("trace_" + name + ".csv"), run.trace, hash_, spec_.master_seed);
    write_checkpoint_binary({run.ensemble, spec_.steps, seed, hash_}, out_ / ("ckpt_" + name + ".bin"));
  }

  int grid() {
    std::vector<Cell> cells;
    for (int n : spec_.n_list)
      for (int r = 0; r < spec_.realizations; ++r)
        for (int s = 0; s < spec_.seeds; ++s) cells.push_back({n, r, s});

    std::optional<Checkpoint> resume;
    if (opt_.resume) {
      if (cells.size() != 1) throw ValidationError("--resume needs a single-cell grid (one n, realization, seed)");
      resume = read_checkpoint(*opt_.resume);
      const Cell& c = cells.front();
      if (resume->ensemble.size() != c.n) throw ValidationError("checkpoint width does not match n_list");
      if (!(resume->ensemble.unit == unit_)) throw ValidationError("checkpoint unit does not match the config");
      if (resume->master_seed != cell_seed(spec_.master_seed, c.n, c.r, c.s))
        throw ValidationError("checkpoint seed does not match the config's master_seed");
      if (resume->config_hash != hash_ && !opt_.force)
        throw ValidationError("checkpoint config hash differs; use --force to continue anyway");
      if (resume->step > spec_.steps) throw ValidationError("checkpoint is past the configured steps");
    }

    std::vector<std::unique_ptr<Target>> targets;
    for (int r = 0; r < spec_.realizations; ++r) {
      SpinTensor t = tensor(r);
      nlohmann::json j = t.to_json();
      j["config_hash"] = hash_;
      j["master_seed"] = spec_.master_seed;
      write_json(out_ / fmt::format("tensor_r{}.json", r), j);
      targets.push_back(std::make_unique<Target>(std::move(t)));
    }
    // one point set shared by every n; values per realization
    const Batch points = eval_points();
    std::vector<Batch> evals(spec_.realizations, points);
    for (int r = 0; r < spec_.realizations; ++r) evaluate_target(*targets[r], evals[r]);

    log_ << fmt::format("{}: {} cells, {} steps each -> {}\n", to_string(spec_.experiment), cells.size(), spec_.steps,
                        out_.string());

    std::vector<CellFailure> failures;
    std::mutex mu;
    const int count = static_cast<int>(cells.size());
    const int saved_levels = omp_get_max_active_levels();
    if (count > 1) omp_set_max_active_levels(1);  // parallel over cells, serial inside
#pragma omp parallel for schedule(dynamic) if (count > 1)
    for (int k = 0; k < count; ++k) {
      const Cell& c = cells[k];
      try {
        run_cell(c, *targets[c.r], evals[c.r], resume);
        std::lock_guard lock(mu);
        log_ << fmt::format("  done {}\n", cell_name(c.n, c.r, c.s));
      } catch (const StepFailure& f) {
        std::lock_guard lock(mu);
        failures.push_back({c, f.step(), f.particle(), f.what()});
      } catch (const std::exception& ex) {
        std::lock_guard lock(mu);
        failures.push_back({c, -1, -1, ex.what()});
      }
    }
    omp_set_max_active_levels(saved_levels);

    if (!failures.empty()) {
      std::sort(failures.begin(), failures.end(), [](const CellFailure& a, const CellFailure& b) {
        return std::tie(a.cell.n, a.cell.r, a.cell.s) < std::tie(b.cell.n, b.cell.r, b.cell.s);
      });
      nlohmann::json j = json_header();
      j["failures"] = nlohmann::json::array();
      for (const auto& f : failures) {
        nlohmann::json e{{"n", f.cell.n}, {"realization", f.cell.r}, {"seed_index", f.cell.s}, {"message", f.message}};
        if (f.step >= 0) e["step"] = f.step;
        if (f.particle >= 0) e["particle"] = f.particle;
        j["failures"].push_back(e);
      }
      j["completed"] = count - static_cast<int>(failures.size());
      write_json(out_ / "failures.json", j);
      log_ << fmt::format("{} of {} cells failed; see failures.json\n", failures.size(), count);
      if (failures.size() < cells.size()) merge_reports(out_, opt_.force);
      return kExitRuntime;
    }
    merge_reports(out_, opt_.force);
    log_ << "summary written to " << (out_ / "summary.json").string() << "\n";
    return kExitOk;
  }

  int slice() {
    const SpinTensor t = tensor(0);
    const Target target(t);
    std::optional<ParticleEnsemble> e;
    if (opt_.checkpoint) {
      Checkpoint cp = read_checkpoint(*opt_.checkpoint);
      if (cp.config_hash != hash_ && !opt_.force)
        log_ << "note: checkpoint was written under config " << cp.config_hash << "\n";
      if (cp.ensemble.unit.input_dim() != spec_.d) throw ValidationError("checkpoint dimension does not match d");
      e = std::move(cp.ensemble);
    } else {
      const int n = spec_.n_list.front();
      const std::uint64_t seed = cell_seed(spec_.master_seed, n, 0, 0);
      DiagnosticPlan p;
      RunOutput run = run_schedule(spec_.train_config(n, seed), initial(n, seed), target, p);
      write_checkpoint_binary({run.ensemble, spec_.steps, seed, hash_}, out_ / ("ckpt_" + cell_name(n, 0, 0) + ".bin"));
      e = std::move(run.ensemble);
    }
    const auto rows = slice_eval(*e, target, spec_.slice_spec(), spec_.slice_resolution);
    std::string text = fmt::format("# mfnet-slice v1\n# config_hash={}\n# master_seed={}\n# slice={}\ntheta,phi",
                                   hash_, spec_.master_seed, spec_.slice);
    for (int k = 0; k < spec_.d; ++k) text += fmt::format(",x{}", k);
    text += ",target,network\n";
    for (const auto& r : rows) {
      text += format_double(r.theta) + "," + format_double(r.phi);
      for (double x : r.x) text += "," + format_double(x);
      text += "," + format_double(r.target) + "," + format_double(r.network) + "\n";
    }
    write_text(out_ / "slice.csv", text);
    log_ << fmt::format("slice: {} rows -> {}\n", rows.size(), (out_ / "slice.csv").string());
    return kExitOk;
  }

  int clt() {
    RngStream probe_rng = RngStream::derive(spec_.master_seed, StreamRole::Probe, 0);
    const SpherePoint probe = sample_sphere(spec_.d, probe_rng);
    const CltResult res = clt_t0_variance(
        spec_.init_spec(), unit_, spec_.clt_n, probe.coords, spec_.clt_seeds,
        RngStream::derive(spec_.master_seed, StreamRole::CltInit, 0),
        RngStream::derive(spec_.master_seed, StreamRole::CltPrior, 0), spec_.clt_mc_draws);
    const bool both_zero = res.measured == 0.0 && res.predicted == 0.0;
    const double ratio = res.predicted != 0.0 ? res.measured / res.predicted : (both_zero ? 1.0 : NAN);
    nlohmann::json j = json_header();
    j["n"] = spec_.clt_n;
    j["seeds"] = spec_.clt_seeds;
    j["mc_draws"] = spec_.clt_mc_draws;
    j["probe"] = probe.coords;
    j["measured"] = res.measured;
    j["predicted"] = res.predicted;
    if (std::isfinite(ratio)) j["ratio"] = ratio;
    j["within_10_percent"] = std::isfinite(ratio) && std::abs(ratio - 1.0) <= 0.1;
    write_json(out_ / "clt.json", j);
    log_ << fmt::format("clt-check: measured {} predicted {}\n", format_double(res.measured),
                        format_double(res.predicted));
    return kExitOk;
  }

  int gradcheck() {
    const auto entries = run_gradcheck(spec_.master_seed, spec_.gradcheck_cases);
    nlohmann::json j = json_header();
    j["tolerance"] = 1e-6;
    j["checks"] = nlohmann::json::array();
    bool ok = true;
    for (const auto& e : entries) {
      const bool pass = e.max_rel_error < 1e-6;
      ok = ok && pass;
      j["checks"].push_back({{"check", e.check}, {"d", e.d}, {"cases", e.cases}, {"max_rel_error", e.max_rel_error},
                             {"pass", pass}});
      log_ << fmt::format("gradcheck {:8s} d={:<3} max rel error {:.3e} {}\n", e.check, e.d, e.max_rel_error,
                          pass ? "ok" : "FAIL");
    }
    j["pass"] = ok;
    write_json(out_ / "gradcheck.json", j);
    return ok ? kExitOk : kExitRuntime;
  }
};

}  // namespace

std::uint64_t tensor_seed(std::uint64_t master_seed, int realization) {
  RngStream rng = RngStream::derive(master_seed, StreamRole::Tensor, static_cast<std::uint64_t>(realization));
  return rng();
}

std::vector<GradCheckEntry> run_gradcheck(std::uint64_t master_seed, int cases, const std::vector<int>& dims) {
  std::vector<GradCheckEntry> out;
  for (int d : dims) {
    const RngStream base = RngStream::derive(master_seed, StreamRole::Synthetic, static_cast<std::uint64_t>(d));
    GradCheckEntry spin{"spin3", d, cases, 0.0}, rbf{"rbf", d, cases, 0.0}, sig{"sigmoid", d, cases, 0.0};
    const Unit ur = Unit::rbf(5.0 / d, d);
    const Unit us = Unit::sigmoid(d);
    InitSpec init;
    for (int k = 0; k < cases; ++k) {
      RngStream rng = base.child(static_cast<std::uint64_t>(k));
      const SpinTensor t = SpinTensor::random(d, rng());
      const SpherePoint x = sample_sphere(d, rng);
      const SpherePoint z = sample_sphere(d, rng);

      const auto g = spin3_grad(t, z.coords);
      spin.max_rel_error = std::max(
          spin.max_rel_error, fd_rel_error([&](const std::vector<double>& p) { return spin3_eval(t, p); }, z.coords, g));

      const auto gr = unit_grad_z(ur, x.coords, z.coords);
      rbf.max_rel_error = std::max(
          rbf.max_rel_error,
          fd_rel_error([&](const std::vector<double>& p) { return unit_eval(ur, x.coords, p); }, z.coords, gr));

      std::vector<double> zs(d + 1);
      double c = 0.0;
      sample_particle(init, us, rng, c, zs);
      const auto gs = unit_grad_z(us, x.coords, zs);
      sig.max_rel_error = std::max(
          sig.max_rel_error, fd_rel_error([&](const std::vector<double>& p) { return unit_eval(us, x.coords, p); }, zs, gs));
    }
    out.push_back(spin);
    out.push_back(rbf);
    out.push_back(sig);
  }
  return out;
}

void write_error_report(const fs::path& out_dir, int code, const std::string& kind, const std::string& message,
                        std::ostream& err) {
  const nlohmann::json j{{"error", kind}, {"exit_code", code}, {"message", message}};
  err << j.dump() << "\n";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!ec) {
    std::ofstream os(out_dir / "error.json");
    if (os) os << j.dump(2) << "\n";
  }
}

int run_experiment(const ExperimentSpec& spec, const RunOptions& options, std::ostream& log) {
  try {
    spec.validate();
    if (options.resume && !is_training(spec.experiment))
      throw ValidationError("--resume applies to training experiments only");
    if (options.threads < 0) throw ValidationError("--threads must be >= 0");
  } catch (const ValidationError& ex) {
    write_error_report(spec.out, kExitValidation, "validation", ex.what(), std::cerr);
    return kExitValidation;
  }
  try {
    if (options.threads > 0) omp_set_num_threads(options.threads);
    fs::create_directories(spec.out);
    write_text(fs::path(spec.out) / "config.cfg",
               fmt::format("# config_hash={}\n# master_seed={}\n", spec.config_hash(), spec.master_seed) +
                   spec.to_text());
    Runner runner(spec, options, log);
    return runner.run();
  } catch (const ValidationError& ex) {
    write_error_report(spec.out, kExitValidation, "validation", ex.what(), std::cerr);
    return kExitValidation;
  } catch (const StepFailure& ex) {
    write_error_report(spec.out, kExitRuntime, "step-failure", ex.what(), std::cerr);
    return kExitRuntime;
  } catch (const std::exception& ex) {
    write_error_report(spec.out, kExitRuntime, "runtime", ex.what(), std::cerr);
    return kExitRuntime;
  }
}

}  // namespace mfnet
