#pragma once

#include <cmath>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

namespace mfnet {

/// Logistic function h(u) = 1 / (1 + e^{-u}), evaluated without overflow.
inline double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

/// The unit phi(x, z) of a network f_n(x) = (1/n) sum_i c_i phi(x, z_i).
///
/// Rbf:     phi(x, z) = exp(alpha x.z), x and z on S^{d-1}(sqrt(d)).
///          This is exp(-alpha |x - z|^2 / 2) times the constant exp(alpha d).
/// Sigmoid: phi(x, (a, b)) = h(a.x + b), z = (a, b) in R^{d+1}, unconstrained.
class Unit {
 public:
  enum class Kind { Rbf, Sigmoid };

  static Unit rbf(double alpha, int d);
  /// Gaussian form exp(-kappa |x - z|^2 / 2); converted to rbf(kappa, d).
  /// Multiply weights by gaussian_weight_scale(kappa, d) to keep the same function.
  static Unit rbf_gaussian(double kappa, int d);
  static double gaussian_weight_scale(double kappa, int d) { return std::exp(-kappa * d); }
  static Unit sigmoid(int d);

  Kind kind() const { return kind_; }
  bool is_rbf() const { return kind_ == Kind::Rbf; }
  int input_dim() const { return d_; }
  int param_dim() const { return kind_ == Kind::Rbf ? d_ : d_ + 1; }
  double alpha() const { return alpha_; }
  /// Radius of the parameter sphere for RBF units.
  double sphere_radius() const { return std::sqrt(static_cast<double>(d_)); }

  double eval(std::span<const double> x, std::span<const double> z) const;
  /// Ambient gradient in z. RBF callers project onto the tangent space themselves.
  void grad_z(std::span<const double> x, std::span<const double> z, std::span<double> out) const;
  /// Gradient in x, used for targets built out of units.
  void grad_x(std::span<const double> x, std::span<const double> z, std::span<double> out) const;

  std::string name() const { return kind_ == Kind::Rbf ? "rbf" : "sigmoid"; }
  nlohmann::json to_json() const;
  static Unit from_json(const nlohmann::json& j);

  bool operator==(const Unit&) const = default;

 private:
  Unit(Kind kind, int d, double alpha) : kind_(kind), d_(d), alpha_(alpha) {}

  // Pre-activation: alpha x.z (RBF) or a.x + b (sigmoid).
  double preactivation(std::span<const double> x, std::span<const double> z) const;

  Kind kind_;
  int d_;
  double alpha_;
};

double unit_eval(const Unit& u, std::span<const double> x, std::span<const double> z);
std::vector<double> unit_grad_z(const Unit& u, std::span<const double> x, std::span<const double> z);

}  // namespace mfnet
