#include "mfnet/spin_tensor.hpp"

#include <string>

#include "mfnet/errors.hpp"
#include "mfnet/rng.hpp"

namespace mfnet {

SpinTensor::SpinTensor(int d, std::vector<double> coefficients, std::uint64_t realization_seed)
    : d_(d), seed_(realization_seed), a_(std::move(coefficients)) {
  if (d < 1) throw InvalidDimension("SpinTensor: d must be >= 1");
  const std::size_t cube = static_cast<std::size_t>(d) * d * d;
  if (a_.size() != cube) {
    throw DimensionMismatch("SpinTensor: expected " + std::to_string(cube) + " coefficients, got " +
                            std::to_string(a_.size()));
  }
  sym_.resize(cube);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int r = 0; r < d; ++r)
        sym_[index(p, q, r)] = (a_[index(p, q, r)] + a_[index(r, p, q)]) + a_[index(q, r, p)];
}

SpinTensor SpinTensor::random(int d, std::uint64_t realization_seed) {
  if (d < 1) throw InvalidDimension("SpinTensor: d must be >= 1");
  RngStream rng(realization_seed, static_cast<std::uint64_t>(d));
  std::vector<double> a(static_cast<std::size_t>(d) * d * d);
  for (double& v : a) v = rng.normal();
  return SpinTensor(d, std::move(a), realization_seed);
}

double SpinTensor::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d_) {
    throw DimensionMismatch("spin3_eval: point has dimension " + std::to_string(x.size()) +
                            ", tensor has " + std::to_string(d_));
  }
  double total = 0.0;
  for (int p = 0; p < d_; ++p) {
    double sp = 0.0;
    for (int q = 0; q < d_; ++q) {
      const double* row = &a_[index(p, q, 0)];
      double sq = 0.0;
      for (int r = 0; r < d_; ++r) sq += row[r] * x[r];
      sp += x[q] * sq;
    }
    total += x[p] * sp;
  }
  return total / d_;
}

void SpinTensor::grad(std::span<const double> z, std::span<double> out) const {
  if (static_cast<int>(z.size()) != d_ || static_cast<int>(out.size()) != d_) {
    throw DimensionMismatch("spin3_grad: point has dimension " + std::to_string(z.size()) +
                            ", tensor has " + std::to_string(d_));
  }
  for (int p = 0; p < d_; ++p) {
    double s = 0.0;
    for (int q = 0; q < d_; ++q)
      for (int r = 0; r < d_; ++r) s += sym_[index(p, q, r)] * z[q] * z[r];
    out[p] = s / d_;
  }
}

nlohmann::json SpinTensor::to_json() const {
  return {{"kind", "spin3"}, {"d", d_}, {"realization_seed", seed_}, {"coefficients", a_}};
}

SpinTensor SpinTensor::from_json(const nlohmann::json& j) {
  return SpinTensor(j.at("d").get<int>(), j.at("coefficients").get<std::vector<double>>(),
                    j.at("realization_seed").get<std::uint64_t>());
}

double spin3_eval(const SpinTensor& t, std::span<const double> x) { return t.eval(x); }

std::vector<double> spin3_grad(const SpinTensor& t, std::span<const double> z) {
  std::vector<double> g(static_cast<std::size_t>(t.dim()));
  t.grad(z, g);
  return g;
}

}  // namespace mfnet
