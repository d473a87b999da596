#include "mfnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "mfnet/errors.hpp"
#include "mfnet/kernels.hpp"
#include "mfnet/sphere.hpp"

namespace mfnet {

double empirical_loss(const ParticleEnsemble& e, const Batch& eval_batch) {
  if (eval_batch.empty()) throw EmptyBatch("empirical_loss: empty batch");
  std::vector<double> net(eval_batch.size());
  kernels::omp::network_on_batch(e, eval_batch, net);
  double s = 0.0;
  for (int p = 0; p < eval_batch.size(); ++p) {
    const double r = eval_batch.values[p] - net[p];
    s += r * r;
  }
  return s / (2.0 * eval_batch.size());
}

double rbf_exact_loss(const ParticleEnsemble& e, const Target& target) {
  if (!e.unit.is_rbf()) throw UnitMismatch("rbf_exact_loss: ensemble is not RBF");
  if (target.dim() != e.unit.input_dim()) throw DimensionMismatch("rbf_exact_loss: target dimension");
  kernels::RbfSums sums;
  kernels::omp::rbf_sums(e, target, sums);
  const int n = e.size();
  double lin = 0.0;
  double quad = 0.0;
  for (int i = 0; i < n; ++i) {
    lin += e.c[i] * sums.f[i];
    quad += e.c[i] * sums.kc[i];
  }
  return -lin / n + quad / (2.0 * n * static_cast<double>(n));
}

double SignedErrors::gap() const { return std::abs(plus + minus - restricted_mean); }

bool SignedErrors::identity_holds() const {
  return gap() <= 1e-12 * std::max(mean_abs_residual, std::numeric_limits<double>::min());
}

SignedErrors signed_errors(std::span<const double> target_values, std::span<const double> network_values) {
  if (target_values.empty()) throw EmptyBatch("signed_error: empty batch");
  SignedErrors s;
  const auto P = static_cast<double>(target_values.size());
  for (std::size_t p = 0; p < target_values.size(); ++p) {
    const double f = target_values[p];
    const double r = f - network_values[p];
    if (f > 0.0) s.plus += r;
    if (f < 0.0) s.minus += r;
    if (f != 0.0) s.restricted_mean += r;
    s.mean_abs_residual += std::abs(r);
  }
  s.plus /= P;
  s.minus /= P;
  s.restricted_mean /= P;
  s.mean_abs_residual /= P;
  return s;
}

SignedErrors signed_errors(const ParticleEnsemble& e, const Batch& eval_batch) {
  if (eval_batch.empty()) throw EmptyBatch("signed_error: empty batch");
  std::vector<double> net(eval_batch.size());
  kernels::omp::network_on_batch(e, eval_batch, net);
  return signed_errors(eval_batch.values, net);
}

double signed_error(const ParticleEnsemble& e, const Batch& eval_batch, Sign sign) {
  const SignedErrors s = signed_errors(e, eval_batch);
  return sign == Sign::Plus ? s.plus : s.minus;
}

Eigen::MatrixXd kernel_M_gram(const ParticleEnsemble& e, std::span<const std::vector<double>> probes) {
  const int K = static_cast<int>(probes.size());
  const int n = e.size();
  const int k_dim = e.param_dim();
  for (const auto& x : probes)
    if (static_cast<int>(x.size()) != e.unit.input_dim()) throw DimensionMismatch("kernel_M_gram: probe dimension");

  // Row k holds, for every particle, (c_i grad_z phi(x_k, z_i), phi(x_k, z_i)).
  const int width = n * (k_dim + 1);
  Eigen::MatrixXd features(K, width);
  std::vector<double> g(k_dim);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < n; ++i) {
      const auto zi = e.param(i);
      e.unit.grad_z(probes[k], zi, g);
      if (e.unit.is_rbf()) tangent_project_in_place(g, zi);
      const int base = i * (k_dim + 1);
      for (int m = 0; m < k_dim; ++m) features(k, base + m) = e.c[i] * g[m];
      features(k, base + k_dim) = e.unit.eval(probes[k], zi);
    }
  }
  Eigen::MatrixXd m = (features * features.transpose()) / static_cast<double>(n);
  for (int l = 0; l < K; ++l)
    for (int k = l + 1; k < K; ++k) m(l, k) = m(k, l);
  return m;
}

CltResult clt_t0_variance(const InitSpec& init, const Unit& unit, int n, std::span<const double> probe, int seeds,
                          const RngStream& init_rng, const RngStream& prior_rng, std::int64_t mc_draws,
                          const PlantedTarget* planted) {
  if (seeds < 2) throw ValidationError("clt_t0_variance: need at least 2 seeds");
  if (n < 1) throw ValidationError("clt_t0_variance: n must be >= 1");
  if (mc_draws < 2) throw ValidationError("clt_t0_variance: need at least 2 Monte Carlo draws");

  std::vector<double> values(seeds);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < seeds; ++s) {
    const ParticleEnsemble e = init_ensemble(init, unit, n, init_rng.child(static_cast<std::uint64_t>(s)), planted);
    values[s] = network_eval(e, probe);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= seeds;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);

  CltResult out;
  out.measured = n * ss / (seeds - 1);

  // phi(probe, theta) = c phi_hat(probe, z) under mu_in, in fixed-size chunks.
  constexpr std::int64_t kChunk = 65536;
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::int64_t start = 0; start < mc_draws; start += kChunk) {
    const int len = static_cast<int>(std::min(kChunk, mc_draws - start));
    const ParticleEnsemble e =
        init_ensemble(init, unit, len, prior_rng.child(static_cast<std::uint64_t>(start / kChunk)), planted);
    for (int i = 0; i < len; ++i) {
      const double phi = e.c[i] * unit.eval(probe, e.param(i));
      sum += phi;
      sum2 += phi * phi;
    }
  }
  const double m1 = sum / mc_draws;
  out.predicted = std::max(0.0, sum2 / mc_draws - m1 * m1);
  return out;
}

SlopeFit fit_scaling_slope(std::span<const ScalingPoint> points) {
  std::vector<double> ns;
  for (const auto& p : points) {
    if (!(p.mean_loss > 0.0)) throw ValidationError("fit_scaling_slope: non-positive loss cannot be logged");
    if (!(p.n > 0.0)) throw ValidationError("fit_scaling_slope: n must be positive");
    ns.push_back(p.n);
  }
  std::sort(ns.begin(), ns.end());
  if (std::unique(ns.begin(), ns.end()) - ns.begin() < 3)
    throw ValidationError("fit_scaling_slope: need at least 3 distinct n values");

  const bool weighted = std::all_of(points.begin(), points.end(), [](const ScalingPoint& p) { return p.sem > 0.0; });
  const std::size_t m = points.size();
  std::vector<double> x(m), y(m), w(m);
  for (std::size_t k = 0; k < m; ++k) {
    x[k] = std::log(points[k].n);
    y[k] = std::log(points[k].mean_loss);
    // delta method: sd(log L) ~ sem / mean
    const double sd = points[k].sem / points[k].mean_loss;
    w[k] = weighted ? 1.0 / (sd * sd) : 1.0;
  }
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sw += w[k];
    sx += w[k] * x[k];
    sy += w[k] * y[k];
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxx += w[k] * (x[k] - xbar) * (x[k] - xbar);
    sxy += w[k] * (x[k] - xbar) * (y[k] - ybar);
  }
  SlopeFit fit;
  fit.weighted = weighted;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  if (weighted) {
    fit.stderr_ = std::sqrt(1.0 / sxx);
  } else {
    double rss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double res = y[k] - fit.intercept - fit.slope * x[k];
      rss += res * res;
    }
    fit.stderr_ = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
  }
  return fit;
}

std::vector<SliceRow> slice_eval(const ParticleEnsemble& e, const Target& target, const SliceSpec& slice,
                                 int resolution) {
  const int d = e.unit.input_dim();
  if (target.dim() != d) throw DimensionMismatch("slice_eval: target and ensemble dimensions differ");
  if (resolution < 1) throw ValidationError("slice_eval: resolution must be >= 1");
  const double r = std::sqrt(static_cast<double>(d));
  constexpr double pi = std::numbers::pi;
  std::vector<SliceRow> rows;

  auto emit = [&](double theta, double phi, std::vector<double> x) {
    const double f = target.eval(x);
    const double fn = network_eval(e, x);
    rows.push_back({theta, phi, std::move(x), f, fn});
  };

  if (slice.kind == SliceSpec::Kind::GreatCircle) {
    if (slice.i == slice.j) throw ValidationError("slice_eval: great circle needs i != j");
    if (slice.i < 0 || slice.j < 0 || slice.i >= d || slice.j >= d)
      throw ValidationError("slice_eval: great-circle index out of range");
    rows.reserve(resolution);
    for (int k = 0; k < resolution; ++k) {
      const double t = 2.0 * pi * k / resolution;
      std::vector<double> x(d, 0.0);
      x[slice.i] = r * std::cos(t);
      x[slice.j] = r * std::sin(t);
      emit(t, 0.0, std::move(x));
    }
  } else {
    if (d < 3) throw InvalidDimension("slice_eval: two-angle slice needs d >= 3");
    rows.reserve(static_cast<std::size_t>(resolution) * resolution);
    for (int a = 0; a < resolution; ++a) {
      const double t = resolution > 1 ? pi * a / (resolution - 1) : 0.0;
      for (int b = 0; b < resolution; ++b) {
        const double p = 2.0 * pi * b / resolution;
        std::vector<double> x(d, 0.0);
        x[0] = r * std::sin(t) * std::cos(p);
        x[1] = r * std::sin(t) * std::sin(p);
        x[2] = r * std::cos(t);
        emit(t, p, std::move(x));
      }
    }
  }
  return rows;
}

double window_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace mfnet
