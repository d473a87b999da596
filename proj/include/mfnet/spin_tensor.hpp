#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace mfnet {

/// Coefficients a_pqr of the spherical 3-spin function
///   f(x) = (1/d) sum_{p,q,r} a_pqr x_p x_q x_r
/// stored dense and unsymmetrized, index ((p * d) + q) * d + r.
class SpinTensor {
 public:
  SpinTensor(int d, std::vector<double> coefficients, std::uint64_t realization_seed = 0);

  /// i.i.d. standard normal coefficients, reproducible from (d, realization_seed).
  static SpinTensor random(int d, std::uint64_t realization_seed);

  int dim() const { return d_; }
  std::uint64_t realization_seed() const { return seed_; }
  std::span<const double> coefficients() const { return a_; }
  double at(int p, int q, int r) const { return a_[index(p, q, r)]; }

  double eval(std::span<const double> x) const;
  void grad(std::span<const double> z, std::span<double> out) const;

  nlohmann::json to_json() const;
  static SpinTensor from_json(const nlohmann::json& j);

 private:
  std::size_t index(int p, int q, int r) const {
    return (static_cast<std::size_t>(p) * d_ + q) * d_ + r;
  }

  int d_;
  std::uint64_t seed_;
  std::vector<double> a_;
  // (a_pqr + a_rpq) + a_qrp, same association as the componentwise gradient formula.
  std::vector<double> sym_;
};

double spin3_eval(const SpinTensor& t, std::span<const double> x);
std::vector<double> spin3_grad(const SpinTensor& t, std::span<const double> z);

}  // namespace mfnet
