#include "mfnet/target.hpp"

#include <algorithm>
#include <cmath>

#include "mfnet/errors.hpp"

namespace mfnet {

double PlantedTarget::total_variation() const {
  double tv = 0.0;
  for (double w : weights) tv += std::abs(w);
  return tv;
}

double planted_eval(const PlantedTarget& p, std::span<const double> x) {
  double s = 0.0;
  for (int k = 0; k < p.atoms(); ++k) s += p.weights[k] * p.unit.eval(x, p.location(k));
  return s;
}

ParticleEnsemble jordan_sample(const PlantedTarget& p, int n, const RngStream& rng) {
  if (n < 1) throw ValidationError("jordan_sample: n must be >= 1");
  const double tv = p.total_variation();
  if (!(tv > 0.0)) throw DegenerateMeasure("jordan_sample: all atom weights are zero");

  std::vector<double> cdf(p.weights.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    acc += std::abs(p.weights[k]);
    cdf[k] = acc / tv;
  }

  ParticleEnsemble e(p.unit, n);
  const int k_dim = p.unit.param_dim();
  for (int i = 0; i < n; ++i) {
    RngStream r = rng.child(static_cast<std::uint64_t>(i));
    const double u = r.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int k = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), p.atoms() - 1));
    // Zero-weight atoms have zero mass; step past them if rounding lands on one.
    while (p.weights[k] == 0.0 && k + 1 < p.atoms()) ++k;
    e.c[i] = p.weights[k] > 0.0 ? tv : -tv;
    std::copy_n(p.location(k).begin(), k_dim, e.param(i).begin());
  }
  return e;
}

int Target::dim() const {
  return std::visit(
      [](const auto& t) -> int {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SpinTensor>) return t.dim();
        else if constexpr (std::is_same_v<T, PlantedTarget>) return t.unit.input_dim();
        else return t.d;
      },
      impl_);
}

double Target::eval(std::span<const double> x) const {
  return std::visit(
      [&](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SpinTensor>) return t.eval(x);
        else if constexpr (std::is_same_v<T, PlantedTarget>) return planted_eval(t, x);
        else return 0.0;
      },
      impl_);
}

void Target::grad(std::span<const double> x, std::span<double> out) const {
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SpinTensor>) {
          t.grad(x, out);
        } else if constexpr (std::is_same_v<T, PlantedTarget>) {
          std::fill(out.begin(), out.end(), 0.0);
          std::vector<double> g(out.size());
          for (int k = 0; k < t.atoms(); ++k) {
            t.unit.grad_x(x, t.location(k), g);
            for (std::size_t m = 0; m < out.size(); ++m) out[m] += t.weights[k] * g[m];
          }
        } else {
          std::fill(out.begin(), out.end(), 0.0);
        }
      },
      impl_);
}

}  // namespace mfnet
