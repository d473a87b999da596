#include "mfnet/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfnet/diagnostics.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/kernels.hpp"
#include "mfnet/sphere.hpp"

namespace mfnet {

void TrainConfig::validate(const Unit& unit) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive and finite");
  if (steps < 0) throw ValidationError("steps must be >= 0");
  for (std::size_t k = 0; k < batch_schedule.size(); ++k) {
    if (batch_schedule[k].size < 1) throw ValidationError("batch schedule: every P must be >= 1");
    if (k > 0 && batch_schedule[k].step <= batch_schedule[k - 1].step)
      throw ValidationError("batch schedule: step indices must be strictly increasing");
  }
  if (!batch_schedule.empty() && batch_schedule.front().step != 0)
    throw ValidationError("batch schedule: first segment must start at step 0");
  for (std::size_t k = 0; k < noise_schedule.size(); ++k) {
    if (!(noise_schedule[k].temperature >= 0.0) || !std::isfinite(noise_schedule[k].temperature))
      throw ValidationError("noise schedule: temperatures must be finite and >= 0");
    if (k > 0 && noise_schedule[k].step <= noise_schedule[k - 1].step)
      throw ValidationError("noise schedule: step indices must be strictly increasing");
  }
  if (!noise_schedule.empty() && noise_schedule.front().step != 0)
    throw ValidationError("noise schedule: first segment must start at step 0");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (!(prior.c_std > 0.0) || !(prior.z_std > 0.0)) throw ValidationError("prior standard deviations must be positive");

  switch (dynamics) {
    case Dynamics::Gd:
      if (!unit.is_rbf()) throw ValidationError("gd: the batch-free flow needs an RBF unit; use sgd for sigmoid");
      if (!batch_schedule.empty()) throw ValidationError("gd: batch schedule given; use sgd");
      break;
    case Dynamics::OnlineSgd:
      if (batch_schedule.empty()) throw ValidationError("sgd: batch schedule required");
      break;
    case Dynamics::Langevin:
      if (batch_schedule.empty() && !unit.is_rbf())
        throw ValidationError("langevin: exact drift needs an RBF unit; give a batch schedule");
      break;
  }
}

int TrainConfig::batch_size_at(std::int64_t step) const {
  int size = 0;
  for (const auto& seg : batch_schedule) {
    if (seg.step > step) break;
    size = seg.size;
  }
  return size;
}

double TrainConfig::temperature_at(std::int64_t step) const {
  if (dynamics != Dynamics::Langevin) return 0.0;
  if (noise_schedule.empty()) return std::isinf(beta) ? 0.0 : 1.0 / beta;
  double t = 0.0;
  for (const auto& seg : noise_schedule) {
    if (seg.step > step) break;
    t = seg.temperature;
  }
  return t;
}

void sample_particle(const InitSpec& init, const Unit& unit, RngStream& rng, double& c, std::span<double> z) {
  switch (init.c.kind) {
    case CLaw::Kind::Zero:
      c = 0.0;
      break;
    case CLaw::Kind::Uniform:
      c = rng.uniform(init.c.lo, init.c.hi);
      break;
    case CLaw::Kind::Normal:
      c = init.c.stddev * rng.normal();
      break;
  }
  if (unit.is_rbf()) {
    sample_sphere_into(z, unit.sphere_radius(), rng);
  } else {
    const int d = unit.input_dim();
    sample_sphere_into(z.first(d), 1.0, rng);
    z[d] = rng.uniform(-1.0, 1.0);
  }
}

ParticleEnsemble init_ensemble(const InitSpec& init, const Unit& unit, int n, const RngStream& rng,
                               const PlantedTarget* planted) {
  if (n < 1) throw ValidationError("init_ensemble: n must be >= 1");
  if (init.z == InitSpec::ZLaw::Planted) {
    if (planted == nullptr) throw ValidationError("init_ensemble: planted z-law needs a planted target");
    if (!(planted->unit == unit)) throw UnitMismatch("init_ensemble: planted target uses a different unit");
    return jordan_sample(*planted, n, rng);
  }
  ParticleEnsemble e(unit, n);
  for (int i = 0; i < n; ++i) {
    RngStream r = rng.child(static_cast<std::uint64_t>(i));
    sample_particle(init, unit, r, e.c[i], e.param(i));
  }
  return e;
}

double Drift::norm2() const {
  double s = 0.0;
  for (double v : dc) s += v * v;
  for (double v : dz) s += v * v;
  return s;
}

Drift rbf_exact_drift(const ParticleEnsemble& e, const Target& target) {
  if (!e.unit.is_rbf()) throw UnitMismatch("rbf_exact_drift: ensemble is not RBF");
  if (target.dim() != e.unit.input_dim()) throw DimensionMismatch("rbf_exact_drift: target dimension");
  kernels::RbfSums sums;
  kernels::omp::rbf_sums(e, target, sums);

  const int n = e.size();
  const int d = e.unit.input_dim();
  const double alpha = e.unit.alpha();
  Drift out;
  out.dc.resize(n);
  out.dz.resize(static_cast<std::size_t>(n) * d);
  double lin = 0.0;
  double quad = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ci = e.c[i];
    out.dc[i] = sums.f[i] - sums.kc[i] / n;
    std::span<double> dzi(out.dz.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * d + k;
      dzi[k] = ci * sums.grad_f[idx] - (alpha / n) * ci * sums.kz[idx];
    }
    tangent_project_in_place(dzi, e.param(i));
    lin += ci * sums.f[i];
    quad += ci * sums.kc[i];
  }
  out.loss = -lin / n + quad / (2.0 * n * static_cast<double>(n));
  return out;
}

Drift batch_drift(const ParticleEnsemble& e, const Batch& batch) {
  if (batch.d != e.unit.input_dim()) throw DimensionMismatch("batch_drift: batch dimension");
  kernels::BatchSums sums;
  kernels::omp::batch_sums(e, batch, sums);
  const int n = e.size();
  const int k_dim = e.param_dim();
  Drift out;
  out.dc = std::move(sums.gc);
  out.dz = std::move(sums.gz);
  for (int i = 0; i < n; ++i) {
    std::span<double> dzi(out.dz.data() + static_cast<std::size_t>(i) * k_dim, static_cast<std::size_t>(k_dim));
    for (double& v : dzi) v *= e.c[i];
    if (e.unit.is_rbf()) tangent_project_in_place(dzi, e.param(i));
  }
  out.loss = sums.half_mse;
  return out;
}

void advance(ParticleEnsemble& e, const Drift& drift, double dt, double temperature, const LangevinPrior& prior,
             const RngStream& noise, std::int64_t step) {
  const int n = e.size();
  const int k_dim = e.param_dim();
  const bool rbf = e.unit.is_rbf();
  const double radius = e.unit.sphere_radius();
  const bool thermal = temperature > 0.0;
  const double reg = temperature / n;                      // (beta n)^{-1}
  const double amp = std::sqrt(2.0 * dt * temperature / n);  // sqrt(2 dt / (beta n))
  int failed = -1;

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    double* zi = e.z.data() + static_cast<std::size_t>(i) * k_dim;
    const double* dzi = drift.dz.data() + static_cast<std::size_t>(i) * k_dim;
    std::span<double> zspan(zi, static_cast<std::size_t>(k_dim));
    if (!thermal) {
      e.c[i] += dt * drift.dc[i];
      for (int k = 0; k < k_dim; ++k) zi[k] += dt * dzi[k];
    } else {
      RngStream xi = noise.child(static_cast<std::uint64_t>(i));
      const double c_old = e.c[i];
      e.c[i] = c_old + dt * (drift.dc[i] - reg * c_old / (prior.c_std * prior.c_std)) + amp * xi.normal();
      double kick[64];
      std::vector<double> kick_heap;
      double* w = kick;
      if (k_dim > 64) {
        kick_heap.resize(k_dim);
        w = kick_heap.data();
      }
      for (int k = 0; k < k_dim; ++k) w[k] = amp * xi.normal();
      std::span<double> wspan(w, static_cast<std::size_t>(k_dim));
      if (rbf) {
        // uniform prior on the sphere: no regularizer in z
        tangent_project_in_place(wspan, zspan);
        for (int k = 0; k < k_dim; ++k) zi[k] += dt * dzi[k] + w[k];
      } else {
        const double zreg = reg / (prior.z_std * prior.z_std);
        for (int k = 0; k < k_dim; ++k) zi[k] += dt * (dzi[k] - zreg * zi[k]) + w[k];
      }
    }
    if (rbf) {
      try {
        retract_in_place(zspan, radius);
      } catch (const DegenerateVector&) {
#pragma omp critical(mfnet_step_failure)
        if (failed < 0 || i < failed) failed = i;
      }
    }
  }
  if (failed >= 0) throw StepFailure(step, failed, "particle reached the origin; cannot retract to the sphere");
}

ParticleEnsemble gd_step_rbf(const ParticleEnsemble& e, const Target& target, double dt) {
  ParticleEnsemble next = e;
  advance(next, rbf_exact_drift(e, target), dt, 0.0, LangevinPrior{}, RngStream(0, 0));
  return next;
}

ParticleEnsemble sgd_step(const ParticleEnsemble& e, const Target& target, int P, double dt, const RngStream& rng) {
  if (P < 1) throw ValidationError("sgd_step: P must be >= 1");
  const Batch batch = draw_batch(target, P, rng.child(0));
  ParticleEnsemble next = e;
  advance(next, batch_drift(e, batch), dt, 0.0, LangevinPrior{}, rng.child(1));
  return next;
}

ParticleEnsemble langevin_step(const ParticleEnsemble& e, const Target& target, std::optional<int> batch_size,
                               double dt, double beta, const LangevinPrior& prior, const RngStream& rng) {
  if (!(beta > 0.0)) throw ValidationError("langevin_step: beta must be positive");
  Drift drift;
  if (batch_size) {
    if (*batch_size < 1) throw ValidationError("langevin_step: P must be >= 1");
    drift = batch_drift(e, draw_batch(target, *batch_size, rng.child(0)));
  } else {
    drift = rbf_exact_drift(e, target);
  }
  const double temperature = std::isinf(beta) ? 0.0 : 1.0 / beta;
  ParticleEnsemble next = e;
  advance(next, drift, dt, temperature, prior, rng.child(1));
  return next;
}

namespace {

ReportRow probe_row(const TrainConfig& cfg, const ParticleEnsemble& e, const Target& target,
                    const DiagnosticPlan& plan, std::int64_t step, double train_loss) {
  ReportRow row;
  row.step = step;
  row.time = static_cast<double>(step) * cfg.dt;
  row.batch_size = cfg.batch_size_at(step);
  row.temperature = cfg.temperature_at(step);
  row.train_loss = train_loss;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  row.eval_loss = row.signed_plus = row.signed_minus = row.signed_gap = nan;
  if (plan.eval_batch != nullptr && !plan.eval_batch->empty()) {
    const Batch& b = *plan.eval_batch;
    std::vector<double> net(b.size());
    kernels::omp::network_on_batch(e, b, net);
    double sq = 0.0;
    for (int p = 0; p < b.size(); ++p) {
      const double r = b.values[p] - net[p];
      sq += r * r;
    }
    row.eval_loss = sq / (2.0 * b.size());
    const SignedErrors s = signed_errors(b.values, net);
    row.signed_plus = s.plus;
    row.signed_minus = s.minus;
    row.signed_gap = s.gap();
  }
  row.exact_loss = e.unit.is_rbf() ? rbf_exact_loss(e, target) : nan;
  row.sphere_dev = e.max_sphere_deviation();
  return row;
}

}  // namespace

RunOutput run_schedule(const TrainConfig& cfg, ParticleEnsemble e0, const Target& target, const DiagnosticPlan& plan,
                       std::int64_t start_step) {
  cfg.validate(e0.unit);
  if (target.dim() != e0.unit.input_dim()) throw DimensionMismatch("run_schedule: target and unit dimensions differ");
  if (start_step < 0 || start_step > cfg.steps) throw ValidationError("run_schedule: start step out of range");

  RunOutput out{std::move(e0), {}, {}};
  ParticleEnsemble& e = out.ensemble;
  if (cfg.steps == 0) return out;
  if (plan.step_trace) out.trace.reserve(static_cast<std::size_t>(cfg.steps - start_step));

  for (std::int64_t s = start_step; s < cfg.steps; ++s) {
    const int P = cfg.batch_size_at(s);
    const double temperature = cfg.temperature_at(s);
    const RngStream rng = RngStream::derive(cfg.master_seed, StreamRole::TrainBatch, static_cast<std::uint64_t>(s));

    const Drift drift = P > 0 ? batch_drift(e, draw_batch(target, P, rng.child(0))) : rbf_exact_drift(e, target);
    if (plan.every > 0 && s % plan.every == 0) out.report.series.push_back(probe_row(cfg, e, target, plan, s, drift.loss));

    const double norm2 = plan.step_trace ? drift.norm2() : 0.0;
    advance(e, drift, cfg.dt, temperature, cfg.prior, rng.child(1), s);
    if (plan.step_trace) out.trace.push_back({s, P, drift.loss, norm2, e.max_sphere_deviation()});
  }

  const double final_train =
      cfg.batch_size_at(cfg.steps) == 0 ? rbf_exact_loss(e, target) : std::numeric_limits<double>::quiet_NaN();
  out.report.series.push_back(probe_row(cfg, e, target, plan, cfg.steps, final_train));
  return out;
}

}  // namespace mfnet
