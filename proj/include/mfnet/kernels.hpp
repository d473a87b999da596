#pragma once

#include <span>
#include <vector>

#include "mfnet/batch.hpp"
#include "mfnet/ensemble.hpp"
#include "mfnet/target.hpp"

// Hot loops of the particle dynamics and diagnostics, in two builds:
//   serial::  straightforward reference written on top of Unit/Target calls
//   omp::     OpenMP version; every output is reduced by one thread in a
//             fixed order, so results do not depend on the thread count.
// Both write the same quantities; tests hold them equal to round-off.
namespace mfnet::kernels {

/// Per-particle interaction sums of the batch-free RBF flow.
struct RbfSums {
  std::vector<double> f;       // f(z_i)
  std::vector<double> grad_f;  // grad f(z_i), n x d
  std::vector<double> kc;      // sum_j c_j exp(alpha z_i.z_j)
  std::vector<double> kz;      // sum_j c_j exp(alpha z_i.z_j) z_j, n x d
};

/// Residual-weighted sums over a batch.
struct BatchSums {
  std::vector<double> network;   // f_n(x_p)
  std::vector<double> residual;  // f(x_p) - f_n(x_p)
  std::vector<double> gc;        // (1/P) sum_p r_p phi(x_p, z_i)
  std::vector<double> gz;        // (1/P) sum_p r_p grad_z phi(x_p, z_i), n x k
  double half_mse = 0.0;         // (1/2P) sum_p r_p^2
};

namespace serial {
void rbf_sums(const ParticleEnsemble& e, const Target& target, RbfSums& out);
void network_on_batch(const ParticleEnsemble& e, const Batch& batch, std::span<double> out);
void batch_sums(const ParticleEnsemble& e, const Batch& batch, BatchSums& out);
}  // namespace serial

namespace omp {
void rbf_sums(const ParticleEnsemble& e, const Target& target, RbfSums& out);
void network_on_batch(const ParticleEnsemble& e, const Batch& batch, std::span<double> out);
void batch_sums(const ParticleEnsemble& e, const Batch& batch, BatchSums& out);
}  // namespace omp

}  // namespace mfnet::kernels
