#pragma once

#include <span>
#include <variant>
#include <vector>

#include "mfnet/ensemble.hpp"
#include "mfnet/rng.hpp"
#include "mfnet/spin_tensor.hpp"
#include "mfnet/unit.hpp"

namespace mfnet {

/// Atomic signed measure gamma = sum_k w_k delta_{z_k}; represents
/// f = sum_k w_k phi(., z_k).
struct PlantedTarget {
  Unit unit;
  std::vector<double> weights;
  std::vector<double> locations;  // atoms x unit.param_dim()

  int atoms() const { return static_cast<int>(weights.size()); }
  std::span<const double> location(int k) const {
    return {locations.data() + static_cast<std::size_t>(k) * unit.param_dim(),
            static_cast<std::size_t>(unit.param_dim())};
  }
  double total_variation() const;
};

double planted_eval(const PlantedTarget& p, std::span<const double> x);

/// n particles with z_i drawn from (gamma_+ + gamma_-)/|gamma|_TV and
/// c_i = +-|gamma|_TV according to the sign of the drawn atom.
ParticleEnsemble jordan_sample(const PlantedTarget& p, int n, const RngStream& rng);

struct ZeroTarget {
  int d;
};

/// The function to learn.
class Target {
 public:
  Target(SpinTensor t) : impl_(std::move(t)) {}
  Target(PlantedTarget p) : impl_(std::move(p)) {}
  Target(ZeroTarget z) : impl_(z) {}

  int dim() const;
  double eval(std::span<const double> x) const;
  void grad(std::span<const double> x, std::span<double> out) const;

  const SpinTensor* spin() const { return std::get_if<SpinTensor>(&impl_); }
  const PlantedTarget* planted() const { return std::get_if<PlantedTarget>(&impl_); }

 private:
  std::variant<SpinTensor, PlantedTarget, ZeroTarget> impl_;
};

}  // namespace mfnet
