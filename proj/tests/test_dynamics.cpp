#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mfnet/batch.hpp"
#include "mfnet/checkpoint.hpp"
#include "mfnet/diagnostics.hpp"
#include "mfnet/dynamics.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/sphere.hpp"

using namespace mfnet;

namespace {

ParticleEnsemble rbf_ensemble(int n, int d, double alpha, double c_half_width, std::uint64_t seed) {
  InitSpec init;
  init.c = c_half_width > 0 ? CLaw{CLaw::Kind::Uniform, -c_half_width, c_half_width, 1.0} : CLaw{};
  return init_ensemble(init, Unit::rbf(alpha, d), n, RngStream(seed, 0));
}

ParticleEnsemble sigmoid_ensemble(int n, int d, std::uint64_t seed) {
  InitSpec init;
  init.c = {CLaw::Kind::Uniform, -1.0, 1.0, 1.0};
  return init_ensemble(init, Unit::sigmoid(d), n, RngStream(seed, 0));
}

PlantedTarget one_atom(const Unit& u, double w, std::uint64_t seed) {
  RngStream r(seed, 3);
  std::vector<double> z(u.param_dim());
  if (u.is_rbf()) {
    z = sample_sphere(u.input_dim(), r).coords;
  } else {
    for (auto& v : z) v = 0.5 * r.normal();
  }
  return {u, {w}, z};
}

TrainConfig gd_config(std::int64_t steps, double dt = 1e-3) {
  TrainConfig cfg;
  cfg.dt = dt;
  cfg.steps = steps;
  cfg.dynamics = Dynamics::Gd;
  cfg.master_seed = 1;
  return cfg;
}

}  // namespace

TEST(GdStep, ZeroWeightsLeaveZUnchanged) {
  const Target t(SpinTensor::random(5, 1));
  const auto e = rbf_ensemble(10, 5, 1.0, 0.0, 2);
  const auto next = gd_step_rbf(e, t, 1e-3);
  EXPECT_EQ(next.z, e.z);
  for (int i = 0; i < e.size(); ++i) EXPECT_EQ(next.c[i], 1e-3 * t.eval(e.param(i)));
}

TEST(GdStep, SingleParticleOnItsOwnTargetIsFixed) {
  const Unit u = Unit::rbf(0.7, 5);
  const PlantedTarget p = one_atom(u, 1.0, 4);
  const ParticleEnsemble e(u, {1.0}, p.locations);
  const Drift d = rbf_exact_drift(e, Target(p));
  EXPECT_NEAR(d.dc[0], 0.0, 1e-12 * std::exp(0.7 * 5));
  for (double v : d.dz) EXPECT_NEAR(v, 0.0, 1e-10);
  const auto next = gd_step_rbf(e, Target(p), 1e-3);
  EXPECT_NEAR(next.c[0], 1.0, 1e-12);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(next.z[k], e.z[k], 1e-12);
}

TEST(GdStep, ExactLossNonIncreasing) {
  for (double cw : {0.0, 1.0}) {
    const Target t(SpinTensor::random(5, 7));
    TrainConfig cfg = gd_config(1000);
    DiagnosticPlan plan;
    plan.step_trace = true;
    const auto run = run_schedule(cfg, rbf_ensemble(16, 5, 1.0, cw, 3), t, plan);
    ASSERT_EQ(run.trace.size(), 1000u);
    for (std::size_t s = 0; s + 1 < run.trace.size(); ++s) {
      const double tol = 1e-9 + 10 * cfg.dt * cfg.dt * run.trace[s].drift_norm2;
      EXPECT_LE(run.trace[s + 1].loss - run.trace[s].loss, tol) << "step " << s;
    }
    EXPECT_LT(run.trace.back().loss, run.trace.front().loss);
  }
}

TEST(GdStep, StaysOnSphere) {
  const Target t(SpinTensor::random(5, 8));
  auto e = rbf_ensemble(32, 5, 1.0, 3.0, 9);
  for (int s = 0; s < 300; ++s) {
    e = gd_step_rbf(e, t, 1e-3);
    ASSERT_LT(e.max_sphere_deviation(), 1e-10);
  }
}

TEST(GdStep, RejectsSigmoid) {
  const Target t(SpinTensor::random(3, 1));
  EXPECT_THROW(gd_step_rbf(sigmoid_ensemble(3, 3, 1), t, 1e-3), UnitMismatch);
}

TEST(SgdStep, PlantedExactNetworkDoesNotMove) {
  for (const Unit& u : {Unit::rbf(0.5, 4), Unit::sigmoid(4)}) {
    const PlantedTarget p = one_atom(u, 1.5, 11);
    const Target t(p);
    for (int n : {1, 8}) {
      const ParticleEnsemble e = jordan_sample(p, n, RngStream(n, 2));
      const auto next = sgd_step(e, t, 64, 1e-2, RngStream(3, 3));
      for (int i = 0; i < n; ++i) EXPECT_NEAR(next.c[i], e.c[i], 1e-14);
      for (std::size_t k = 0; k < e.z.size(); ++k) EXPECT_NEAR(next.z[k], e.z[k], 1e-14);
    }
  }
}

TEST(SgdStep, ZeroTimeStepIsIdentity) {
  const Target t(SpinTensor::random(5, 2));
  for (const auto& e : {rbf_ensemble(12, 5, 1.0, 2.0, 1), sigmoid_ensemble(12, 5, 1)}) {
    const auto next = sgd_step(e, t, 16, 0.0, RngStream(4, 4));
    EXPECT_EQ(next.c, e.c);
    EXPECT_EQ(next.z, e.z);
  }
}

TEST(SgdStep, BatchAveragedDriftIsUnbiased) {
  // light version of the acceptance check: 4000 batches of P = 64 vs one batch of 10^6
  for (bool rbf : {true, false}) {
    const int d = 5;
    const Target t(SpinTensor::random(d, 21));
    const auto e = rbf ? rbf_ensemble(8, d, 0.5, 1.0, 5) : sigmoid_ensemble(8, d, 5);
    const int k_dim = e.param_dim();
    const int reps = 4000;
    std::vector<double> s(e.size() * (k_dim + 1), 0.0), s2(s.size(), 0.0);
    for (int r = 0; r < reps; ++r) {
      const Drift dr = batch_drift(e, draw_batch(t, 64, RngStream::derive(7, StreamRole::Synthetic, r)));
      for (int i = 0; i < e.size(); ++i)
        for (int k = 0; k <= k_dim; ++k) {
          const double v = k == 0 ? dr.dc[i] : dr.dz[i * k_dim + k - 1];
          s[i * (k_dim + 1) + k] += v;
          s2[i * (k_dim + 1) + k] += v * v;
        }
    }
    const Drift ref = batch_drift(e, draw_batch(t, 1000000, RngStream(8, 8)));
    int outside = 0;
    for (int i = 0; i < e.size(); ++i)
      for (int k = 0; k <= k_dim; ++k) {
        const std::size_t idx = i * (k_dim + 1) + k;
        const double mean = s[idx] / reps;
        const double se = std::sqrt((s2[idx] / reps - mean * mean) / reps);
        const double v = k == 0 ? ref.dc[i] : ref.dz[i * k_dim + k - 1];
        outside += std::abs(mean - v) > 4 * se + 1e-12;
      }
    EXPECT_EQ(outside, 0) << (rbf ? "rbf" : "sigmoid");
  }
}

TEST(LangevinStep, InfiniteBetaMatchesPlainSteps) {
  const Target t(SpinTensor::random(5, 3));
  const double inf = std::numeric_limits<double>::infinity();
  const auto er = rbf_ensemble(10, 5, 1.0, 1.0, 2);
  const auto a = langevin_step(er, t, std::nullopt, 1e-3, inf, {}, RngStream(1, 1));
  const auto b = gd_step_rbf(er, t, 1e-3);
  EXPECT_EQ(a.c, b.c);
  EXPECT_EQ(a.z, b.z);

  const auto es = sigmoid_ensemble(10, 5, 2);
  const auto c = langevin_step(es, t, 32, 1e-2, inf, {}, RngStream(5, 5));
  const auto d = sgd_step(es, t, 32, 1e-2, RngStream(5, 5));
  EXPECT_EQ(c.c, d.c);
  EXPECT_EQ(c.z, d.z);
}

TEST(LangevinStep, GaussianPriorPullsCTowardZero) {
  // same noise stream for both ensembles, so the difference is the regularizer alone
  const int n = 4;
  const double dt = 1e-2, T = 0.5;
  ParticleEnsemble a = sigmoid_ensemble(n, 3, 1), b = a;
  for (int i = 0; i < n; ++i) {
    a.c[i] = 1.0 + i;
    b.c[i] = 0.0;
  }
  Drift zero;
  zero.dc.assign(n, 0.0);
  zero.dz.assign(a.z.size(), 0.0);
  const RngStream noise(3, 3);
  advance(a, zero, dt, T, {}, noise);
  advance(b, zero, dt, T, {}, noise);
  for (int i = 0; i < n; ++i) EXPECT_NEAR(a.c[i] - b.c[i], (1.0 + i) * (1 - dt * T / n), 1e-14);
}

TEST(LangevinStep, IncrementVarianceMatchesNoiseAmplitude) {
  // zero drift: ZeroTarget with c = 0 and alpha = 0 makes every drift term vanish
  const int n = 8;
  const double dt = 1e-3, beta = 50.0;
  const Target t(ZeroTarget{3});
  ParticleEnsemble e = rbf_ensemble(n, 3, 0.0, 0.0, 1);
  const int steps = 20000;
  double s2 = 0.0;
  LangevinPrior flat{1e9, 1.0};
  for (int s = 0; s < steps; ++s) {
    const auto before = e.c;
    e = langevin_step(e, t, std::nullopt, dt, beta, flat, RngStream::derive(2, StreamRole::TrainBatch, s));
    for (int i = 0; i < n; ++i) s2 += (e.c[i] - before[i]) * (e.c[i] - before[i]);
  }
  const double expect = 2 * dt / (beta * n);
  EXPECT_NEAR(s2 / (steps * n), expect, 0.03 * expect);
}

TEST(LangevinStep, RejectsNonPositiveBeta) {
  const Target t(SpinTensor::random(3, 1));
  EXPECT_THROW(langevin_step(rbf_ensemble(2, 3, 1.0, 1.0, 1), t, std::nullopt, 1e-3, 0.0, {}, RngStream(1, 1)),
               ValidationError);
}

TEST(LangevinStep, PlantedFixedPointStaysNearZeroLoss) {
  const int n = 16;
  const double beta = 1e4;
  const Unit u = Unit::rbf(0.5, 5);
  const PlantedTarget p = one_atom(u, 1.0, 2);
  const Target t(p);
  TrainConfig cfg;
  cfg.dt = 1e-3;
  cfg.steps = 10000;
  cfg.dynamics = Dynamics::Langevin;
  cfg.beta = beta;
  cfg.master_seed = 5;
  Batch eval = draw_batch(t, 2000, RngStream(9, 9));
  DiagnosticPlan plan;
  plan.eval_batch = &eval;
  plan.every = 1000;
  const auto run = run_schedule(cfg, jordan_sample(p, n, RngStream(1, 1)), t, plan);
  for (const auto& row : run.report.series) EXPECT_LT(row.eval_loss, 10.0 / (beta * n)) << "step " << row.step;
}

TEST(Advance, NonFiniteStepReportsParticle) {
  auto e = rbf_ensemble(5, 3, 1.0, 1.0, 1);
  Drift d;
  d.dc.assign(5, 0.0);
  d.dz.assign(15, 0.0);
  d.dz[2 * 3 + 1] = std::numeric_limits<double>::quiet_NaN();
  d.dz[4 * 3 + 1] = std::numeric_limits<double>::quiet_NaN();
  try {
    advance(e, d, 1e-3, 0.0, {}, RngStream(1, 1), 42);
    FAIL() << "expected StepFailure";
  } catch (const StepFailure& f) {
    EXPECT_EQ(f.step(), 42);
    EXPECT_EQ(f.particle(), 2);
  }
}

TEST(TrainConfig, Validation) {
  const Unit rbf = Unit::rbf(1.0, 3), sig = Unit::sigmoid(3);
  TrainConfig cfg = gd_config(10);
  EXPECT_NO_THROW(cfg.validate(rbf));
  EXPECT_THROW(cfg.validate(sig), ValidationError);
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.validate(rbf), ValidationError);

  TrainConfig sgd = gd_config(10);
  sgd.dynamics = Dynamics::OnlineSgd;
  EXPECT_THROW(sgd.validate(sig), ValidationError);
  sgd.batch_schedule = {{0, 4}, {5, 8}};
  EXPECT_NO_THROW(sgd.validate(sig));
  sgd.batch_schedule = {{0, 4}, {5, 0}};
  EXPECT_THROW(sgd.validate(sig), ValidationError);
  sgd.batch_schedule = {{0, 4}, {5, 8}, {5, 9}};
  EXPECT_THROW(sgd.validate(sig), ValidationError);
  sgd.batch_schedule = {{2, 4}};
  EXPECT_THROW(sgd.validate(sig), ValidationError);
}

TEST(TrainConfig, ScheduleLookup) {
  TrainConfig cfg = gd_config(100);
  cfg.dynamics = Dynamics::Langevin;
  cfg.batch_schedule = {{0, 12}, {90, 144}};
  cfg.noise_schedule = {{0, 1e-4}, {50, 0.0}};
  EXPECT_EQ(cfg.batch_size_at(0), 12);
  EXPECT_EQ(cfg.batch_size_at(89), 12);
  EXPECT_EQ(cfg.batch_size_at(90), 144);
  EXPECT_EQ(cfg.temperature_at(49), 1e-4);
  EXPECT_EQ(cfg.temperature_at(50), 0.0);
  cfg.dynamics = Dynamics::OnlineSgd;
  EXPECT_EQ(cfg.temperature_at(0), 0.0);
}

TEST(RunSchedule, ZeroStepsReturnsInitialState) {
  const Target t(SpinTensor::random(5, 1));
  const auto e0 = rbf_ensemble(6, 5, 1.0, 1.0, 1);
  const auto run = run_schedule(gd_config(0), e0, t, {});
  EXPECT_EQ(run.ensemble, e0);
  EXPECT_TRUE(run.report.series.empty());
}

TEST(RunSchedule, BatchSizeJumpsAtQuenchStep) {
  const Target t(SpinTensor::random(4, 2));
  TrainConfig cfg = gd_config(40, 1e-2);
  cfg.dynamics = Dynamics::OnlineSgd;
  cfg.batch_schedule = {{0, 3}, {30, 9}};
  DiagnosticPlan plan;
  plan.every = 1;
  plan.step_trace = true;
  const auto run = run_schedule(cfg, sigmoid_ensemble(10, 4, 3), t, plan);
  ASSERT_EQ(run.report.series.size(), 41u);
  for (const auto& row : run.report.series) EXPECT_EQ(row.batch_size, row.step < 30 ? 3 : 9) << row.step;
  for (const auto& tr : run.trace) EXPECT_EQ(tr.batch_size, tr.step < 30 ? 3 : 9);
  for (std::size_t k = 1; k < run.report.series.size(); ++k)
    EXPECT_GT(run.report.series[k].step, run.report.series[k - 1].step);
}

TEST(RunSchedule, DeterministicAndResumable) {
  const Target t(SpinTensor::random(5, 3));
  TrainConfig cfg = gd_config(60, 1e-3);
  cfg.dynamics = Dynamics::Langevin;
  cfg.noise_schedule = {{0, 1e-3}, {30, 0.0}};
  cfg.master_seed = 77;
  const auto e0 = rbf_ensemble(12, 5, 1.0, 2.0, 4);
  const auto full = run_schedule(cfg, e0, t, {});
  const auto again = run_schedule(cfg, e0, t, {});
  EXPECT_EQ(full.ensemble, again.ensemble);

  TrainConfig first = cfg;
  first.steps = 25;
  const auto part = run_schedule(first, e0, t, {});
  const Checkpoint cp{part.ensemble, 25, cfg.master_seed, "abc"};
  const auto path = std::filesystem::temp_directory_path() / "mfnet_resume_test.bin";
  write_checkpoint_binary(cp, path);
  const Checkpoint back = read_checkpoint(path);
  std::filesystem::remove(path);
  const auto resumed = run_schedule(cfg, back.ensemble, t, {}, back.step);
  EXPECT_EQ(resumed.ensemble.c, full.ensemble.c);
  EXPECT_EQ(resumed.ensemble.z, full.ensemble.z);
}

TEST(InitEnsemble, LawsAndShapes) {
  InitSpec init;
  init.c = {CLaw::Kind::Uniform, -40 * 25.0, 40 * 25.0, 1.0};
  const auto e = init_ensemble(init, Unit::rbf(1.0, 5), 2000, RngStream(1, 1));
  EXPECT_LT(e.max_sphere_deviation(), 1e-12);
  for (double c : e.c) {
    EXPECT_GE(c, -1000.0);
    EXPECT_LT(c, 1000.0);
  }
  const auto s = init_ensemble(InitSpec{}, Unit::sigmoid(4), 500, RngStream(2, 2));
  for (int i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s.c[i], 0.0);
    const auto z = s.param(i);
    EXPECT_NEAR(std::sqrt(dot(z.subspan(0, 4), z.subspan(0, 4))), 1.0, 1e-12);
    EXPECT_LE(std::abs(z[4]), 1.0);
  }
}
