#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfnet/batch.hpp"
#include "mfnet/dynamics.hpp"
#include "mfnet/ensemble.hpp"
#include "mfnet/target.hpp"

namespace mfnet {

/// (1/2P) sum_p |f(x_p) - f_n(x_p)|^2
double empirical_loss(const ParticleEnsemble& e, const Batch& eval_batch);

/// Batch-free RBF loss without the constant C_f:
///   -(1/n) sum_i c_i f(z_i) + (1/2n^2) sum_ij c_i c_j exp(alpha z_i.z_j)
double rbf_exact_loss(const ParticleEnsemble& e, const Target& target);

enum class Sign { Plus, Minus };

/// (1/P) sum_p Theta(+-f(x_p)) (f(x_p) - f_n(x_p)), with Theta(0) = 0.
double signed_error(const ParticleEnsemble& e, const Batch& eval_batch, Sign sign);

struct SignedErrors {
  double plus = 0.0;
  double minus = 0.0;
  double restricted_mean = 0.0;  // (1/P) sum over f(x_p) != 0 of the residual
  double mean_abs_residual = 0.0;

  double gap() const;
  /// plus + minus matches the restricted mean to round-off (1e-12 of the mean |residual|).
  bool identity_holds() const;
};

/// Both signed errors and the independently summed restricted residual mean,
/// from precomputed network values.
SignedErrors signed_errors(std::span<const double> target_values, std::span<const double> network_values);
SignedErrors signed_errors(const ParticleEnsemble& e, const Batch& eval_batch);

/// M_kl = (1/n) sum_i [c_i^2 grad_z phi(x_k, z_i).grad_z phi(x_l, z_i) + phi(x_k, z_i) phi(x_l, z_i)].
/// RBF gradients are taken along the sphere (tangent projection).
Eigen::MatrixXd kernel_M_gram(const ParticleEnsemble& e, std::span<const std::vector<double>> probes);

struct CltResult {
  double measured = 0.0;   // n * sample variance of f_n(probe) over seeds
  double predicted = 0.0;  // E[phi^2] - E[phi]^2 under mu_in
};

/// Initialization of seed s uses init_rng.child(s); the prediction uses
/// mc_draws particles from prior_rng.
CltResult clt_t0_variance(const InitSpec& init, const Unit& unit, int n, std::span<const double> probe, int seeds,
                          const RngStream& init_rng, const RngStream& prior_rng, std::int64_t mc_draws = 1000000,
                          const PlantedTarget* planted = nullptr);

struct ScalingPoint {
  double n;
  double mean_loss;
  double sem;
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  bool weighted = false;
};

/// Least-squares slope of log(loss) against log(n). Weighted by
/// (mean/sem)^2 when every sem is positive, ordinary least squares otherwise.
SlopeFit fit_scaling_slope(std::span<const ScalingPoint> points);

struct SliceSpec {
  enum class Kind { TwoAngle, GreatCircle };
  Kind kind = Kind::TwoAngle;
  int i = 0;
  int j = 1;

  static SliceSpec two_angle() { return {Kind::TwoAngle, 0, 0}; }
  static SliceSpec great_circle(int i, int j) { return {Kind::GreatCircle, i, j}; }
};

struct SliceRow {
  double theta;
  double phi;  // 0 on great circles
  std::vector<double> x;
  double target;
  double network;
};

/// Two-angle slice x = sqrt(d)(sin t cos p, sin t sin p, cos t, 0, ...), t in [0, pi]
/// and p in [0, 2 pi) on a resolution x resolution grid; or the great circle
/// x_i = sqrt(d) cos t, x_j = sqrt(d) sin t with t in [0, 2 pi).
std::vector<SliceRow> slice_eval(const ParticleEnsemble& e, const Target& target, const SliceSpec& slice,
                                 int resolution);

/// Sample standard deviation.
double window_stddev(std::span<const double> values);

}  // namespace mfnet
