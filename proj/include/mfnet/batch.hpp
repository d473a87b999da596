#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfnet/ensemble.hpp"
#include "mfnet/rng.hpp"
#include "mfnet/target.hpp"

namespace mfnet {

/// P input points on S^{d-1}(sqrt(d)) with the target evaluated on them.
struct Batch {
  int d = 0;
  std::vector<double> points;  // P x d
  std::vector<double> values;  // f(x_p)

  int size() const { return static_cast<int>(values.size()); }
  bool empty() const { return values.empty(); }
  std::span<const double> point(int p) const {
    return {points.data() + static_cast<std::size_t>(p) * d, static_cast<std::size_t>(d)};
  }
};

/// Point p is drawn from rng.child(p), so the batch is independent of thread count.
Batch draw_batch(const Target& target, int P, const RngStream& rng);
/// Points only; values left at zero.
Batch draw_points(int d, int P, const RngStream& rng);
/// Fills values from the target (in parallel over points).
void evaluate_target(const Target& target, Batch& batch);

/// K_hat_P(z, z') = (1/P) sum_p phi(x_p, z) phi(x_p, z'); exactly symmetric.
double khat_eval(const Unit& u, std::span<const double> z, std::span<const double> zp, const Batch& quad);
/// F_hat_P(z) = (1/P) sum_p f(x_p) phi(x_p, z) using the batch's target values.
double fhat_eval(const Unit& u, const Batch& quad, std::span<const double> z);
double fhat_eval(const Unit& u, const Target& target, std::span<const double> z, const Batch& quad);

/// Matrix K_hat_P(z_i, z_j) (the Gram matrix Phi Phi^T / P).
Eigen::MatrixXd khat_gram(const ParticleEnsemble& e, const Batch& quad);
/// Matrix c_i c_j K_hat_P(z_i, z_j).
Eigen::MatrixXd gram_K(const ParticleEnsemble& e, const Batch& quad);

}  // namespace mfnet
