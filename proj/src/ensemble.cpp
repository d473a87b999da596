#include "mfnet/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mfnet/errors.hpp"
#include "mfnet/sphere.hpp"

namespace mfnet {

ParticleEnsemble::ParticleEnsemble(Unit u, std::vector<double> weights, std::vector<double> params)
    : unit(u), c(std::move(weights)), z(std::move(params)) {
  if (z.size() != c.size() * static_cast<std::size_t>(unit.param_dim())) {
    throw DimensionMismatch("ParticleEnsemble: " + std::to_string(c.size()) + " weights but " +
                            std::to_string(z.size()) + " parameter entries");
  }
}

ParticleEnsemble::ParticleEnsemble(Unit u, int n)
    : unit(u),
      c(static_cast<std::size_t>(std::max(n, 0)), 0.0),
      z(static_cast<std::size_t>(std::max(n, 0)) * u.param_dim(), 0.0) {}

double ParticleEnsemble::max_sphere_deviation() const {
  if (!unit.is_rbf()) return 0.0;
  double worst = 0.0;
  for (int i = 0; i < size(); ++i) worst = std::max(worst, std::abs(norm(param(i)) - unit.sphere_radius()));
  return worst;
}

void ParticleEnsemble::validate(double sphere_tol) const {
  if (size() < 1) throw ValidationError("ParticleEnsemble: n must be >= 1");
  if (z.size() != c.size() * static_cast<std::size_t>(param_dim()))
    throw DimensionMismatch("ParticleEnsemble: inconsistent parameter array");
  if (unit.is_rbf() && max_sphere_deviation() > sphere_tol)
    throw ValidationError("ParticleEnsemble: RBF particle off the sphere");
}

double network_eval(const ParticleEnsemble& e, std::span<const double> x) {
  double s = 0.0;
  for (int i = 0; i < e.size(); ++i) s += e.c[i] * e.unit.eval(x, e.param(i));
  return s / e.size();
}

}  // namespace mfnet
