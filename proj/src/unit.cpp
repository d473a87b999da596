#include "mfnet/unit.hpp"

#include <vector>

#include "mfnet/errors.hpp"

namespace mfnet {

Unit Unit::rbf(double alpha, int d) {
  if (d < 1) throw InvalidDimension("rbf unit: d must be >= 1");
  if (!(alpha >= 0.0)) throw ValidationError("rbf unit: alpha must be non-negative");
  return Unit(Kind::Rbf, d, alpha);
}

Unit Unit::rbf_gaussian(double kappa, int d) { return rbf(kappa, d); }

Unit Unit::sigmoid(int d) {
  if (d < 1) throw InvalidDimension("sigmoid unit: d must be >= 1");
  return Unit(Kind::Sigmoid, d, 0.0);
}

double Unit::preactivation(std::span<const double> x, std::span<const double> z) const {
  if (static_cast<int>(x.size()) != d_ || static_cast<int>(z.size()) != param_dim()) {
    throw DimensionMismatch(name() + " unit: got input dim " + std::to_string(x.size()) +
                            " and parameter dim " + std::to_string(z.size()));
  }
  double s = 0.0;
  for (int k = 0; k < d_; ++k) s += x[k] * z[k];
  return kind_ == Kind::Rbf ? alpha_ * s : s + z[d_];
}

double Unit::eval(std::span<const double> x, std::span<const double> z) const {
  const double u = preactivation(x, z);
  return kind_ == Kind::Rbf ? std::exp(u) : logistic(u);
}

void Unit::grad_z(std::span<const double> x, std::span<const double> z, std::span<double> out) const {
  const double u = preactivation(x, z);
  if (kind_ == Kind::Rbf) {
    const double g = alpha_ * std::exp(u);
    for (int k = 0; k < d_; ++k) out[k] = g * x[k];
  } else {
    const double h = logistic(u);
    const double g = h * (1.0 - h);
    for (int k = 0; k < d_; ++k) out[k] = g * x[k];
    out[d_] = g;
  }
}

void Unit::grad_x(std::span<const double> x, std::span<const double> z, std::span<double> out) const {
  const double u = preactivation(x, z);
  double g;
  if (kind_ == Kind::Rbf) {
    g = alpha_ * std::exp(u);
  } else {
    const double h = logistic(u);
    g = h * (1.0 - h);
  }
  for (int k = 0; k < d_; ++k) out[k] = g * z[k];
}

nlohmann::json Unit::to_json() const {
  nlohmann::json j{{"kind", name()}, {"d", d_}};
  if (kind_ == Kind::Rbf) j["alpha"] = alpha_;
  return j;
}

Unit Unit::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const int d = j.at("d").get<int>();
  if (kind == "rbf") return rbf(j.at("alpha").get<double>(), d);
  if (kind == "sigmoid") return sigmoid(d);
  throw ValidationError("unknown unit kind '" + kind + "'");
}

double unit_eval(const Unit& u, std::span<const double> x, std::span<const double> z) {
  return u.eval(x, z);
}

std::vector<double> unit_grad_z(const Unit& u, std::span<const double> x, std::span<const double> z) {
  std::vector<double> g(static_cast<std::size_t>(u.param_dim()));
  u.grad_z(x, z, g);
  return g;
}

}  // namespace mfnet
