#pragma once

#include <span>
#include <vector>

#include "mfnet/unit.hpp"

namespace mfnet {

/// n particles theta_i = (c_i, z_i). z is row-major, n x unit.param_dim().
struct ParticleEnsemble {
  Unit unit;
  std::vector<double> c;
  std::vector<double> z;

  ParticleEnsemble(Unit u, std::vector<double> weights, std::vector<double> params);
  /// n particles with c = 0 and z = 0 (caller fills them in).
  ParticleEnsemble(Unit u, int n);

  int size() const { return static_cast<int>(c.size()); }
  int param_dim() const { return unit.param_dim(); }

  std::span<const double> param(int i) const {
    return {z.data() + static_cast<std::size_t>(i) * param_dim(), static_cast<std::size_t>(param_dim())};
  }
  std::span<double> param(int i) {
    return {z.data() + static_cast<std::size_t>(i) * param_dim(), static_cast<std::size_t>(param_dim())};
  }

  /// Largest | |z_i| - sqrt(d) | over particles (0 for sigmoid ensembles).
  double max_sphere_deviation() const;

  /// Throws if sizes disagree, n < 1, or RBF particles are off the sphere by more than tol.
  void validate(double sphere_tol = 1e-10) const;

  bool operator==(const ParticleEnsemble&) const = default;
};

/// f_n(x) = (1/n) sum_i c_i phi(x, z_i)
double network_eval(const ParticleEnsemble& e, std::span<const double> x);

}  // namespace mfnet
