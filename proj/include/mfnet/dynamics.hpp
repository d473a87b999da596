#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mfnet/batch.hpp"
#include "mfnet/ensemble.hpp"
#include "mfnet/report.hpp"
#include "mfnet/rng.hpp"
#include "mfnet/target.hpp"

namespace mfnet {

enum class Dynamics { Gd, OnlineSgd, Langevin };

/// Law of the initial outer weights c.
struct CLaw {
  enum class Kind { Zero, Uniform, Normal };
  Kind kind = Kind::Zero;
  double lo = -1.0;
  double hi = 1.0;
  double stddev = 1.0;

  bool operator==(const CLaw&) const = default;
};

/// Initial particle law mu_in.
///   z uniform: RBF -> uniform on S^{d-1}(sqrt(d));
///              sigmoid -> a uniform on S^{d-1}(1), b uniform on [-1, 1].
///   z planted: Jordan sampling of a planted target (sets both c and z).
struct InitSpec {
  enum class ZLaw { Uniform, Planted };
  CLaw c;
  ZLaw z = ZLaw::Uniform;

  bool operator==(const InitSpec&) const = default;
};

/// rho_0 for the Langevin regularizer: N(0, c_std^2) in c times uniform on the
/// sphere (RBF) or N(0, z_std^2 I) (sigmoid) in z.
struct LangevinPrior {
  double c_std = 1.0;
  double z_std = 1.0;

  bool operator==(const LangevinPrior&) const = default;
};

struct BatchSegment {
  std::int64_t step;
  int size;
  bool operator==(const BatchSegment&) const = default;
};

/// temperature = 1 / beta; 0 switches the noise and the regularizer off.
struct NoiseSegment {
  std::int64_t step;
  double temperature;
  bool operator==(const NoiseSegment&) const = default;
};

struct TrainConfig {
  double dt = 1e-3;
  std::int64_t steps = 0;
  Dynamics dynamics = Dynamics::Gd;
  std::vector<BatchSegment> batch_schedule;  // empty -> exact (batch-free RBF) drift
  std::vector<NoiseSegment> noise_schedule;  // Langevin only; overrides beta when present
  double beta = std::numeric_limits<double>::infinity();
  InitSpec init;
  std::uint64_t master_seed = 0;
  LangevinPrior prior;

  void validate(const Unit& unit) const;
  /// Batch size in force at `step`; 0 means the exact drift.
  int batch_size_at(std::int64_t step) const;
  /// Langevin temperature at `step`; 0 for GD and SGD.
  double temperature_at(std::int64_t step) const;
};

/// One particle drawn from mu_in into (c, z).
void sample_particle(const InitSpec& init, const Unit& unit, RngStream& rng, double& c, std::span<double> z);

/// Particle i uses rng.child(i).
ParticleEnsemble init_ensemble(const InitSpec& init, const Unit& unit, int n, const RngStream& rng,
                               const PlantedTarget* planted = nullptr);

/// Right-hand side of the particle ODE, already tangent-projected for RBF z.
struct Drift {
  std::vector<double> dc;
  std::vector<double> dz;
  /// Exact RBF loss (batch-free drift) or (1/2P) sum r_p^2 (batch drift) at the
  /// state the drift was evaluated on.
  double loss = 0.0;

  double norm2() const;
};

/// dz_i = P_z[c_i grad f(z_i) - (alpha/n) sum_j c_i c_j z_j exp(alpha z_i.z_j)]
/// dc_i = f(z_i) - (1/n) sum_j c_j exp(alpha z_i.z_j)
Drift rbf_exact_drift(const ParticleEnsemble& e, const Target& target);

/// grad F_P(theta_i) - (1/n) sum_j grad K_P(theta_i, theta_j) on the given batch.
Drift batch_drift(const ParticleEnsemble& e, const Batch& batch);

/// In-place Euler(-Maruyama) update with the given drift. With temperature T > 0
/// adds (T/n) grad log rho_0 dt + sqrt(2 dt T / n) xi, xi from noise.child(i).
/// RBF particles are projected and retracted; a zero-norm z throws StepFailure.
void advance(ParticleEnsemble& e, const Drift& drift, double dt, double temperature,
             const LangevinPrior& prior, const RngStream& noise, std::int64_t step = 0);

/// Streams used by one step: batch points from rng.child(0), noise from rng.child(1).
ParticleEnsemble gd_step_rbf(const ParticleEnsemble& e, const Target& target, double dt);
ParticleEnsemble sgd_step(const ParticleEnsemble& e, const Target& target, int P, double dt, const RngStream& rng);
/// batch_size nullopt -> exact RBF drift. beta = infinity disables noise and regularizer.
ParticleEnsemble langevin_step(const ParticleEnsemble& e, const Target& target, std::optional<int> batch_size,
                               double dt, double beta, const LangevinPrior& prior, const RngStream& rng);

/// What run_schedule records.
struct DiagnosticPlan {
  std::int64_t every = 0;             // probe cadence; 0 -> final state only
  const Batch* eval_batch = nullptr;  // fixed evaluation batch with target values
  bool step_trace = false;            // per-step loss and drift norm
};

struct StepTrace {
  std::int64_t step;
  int batch_size;
  double loss;         // Drift::loss before the step
  double drift_norm2;  // |drift|^2 before the step
  double sphere_dev;   // max | |z_i| - sqrt(d) | after the step
};

struct RunOutput {
  ParticleEnsemble ensemble;
  ExperimentReport report;
  std::vector<StepTrace> trace;
};

/// Executes steps [start_step, cfg.steps). The step-s stream is
/// derive(cfg.master_seed, TrainBatch, s), so a run resumed from a checkpoint
/// at step s reproduces the uninterrupted run bit for bit.
RunOutput run_schedule(const TrainConfig& cfg, ParticleEnsemble e0, const Target& target,
                       const DiagnosticPlan& plan, std::int64_t start_step = 0);

}  // namespace mfnet
