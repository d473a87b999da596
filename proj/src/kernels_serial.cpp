#include <cmath>

#include "mfnet/errors.hpp"
#include "mfnet/kernels.hpp"
#include "mfnet/sphere.hpp"

namespace mfnet::kernels::serial {

void rbf_sums(const ParticleEnsemble& e, const Target& target, RbfSums& out) {
  if (!e.unit.is_rbf()) throw UnitMismatch("rbf_sums: ensemble is not RBF");
  const int n = e.size();
  const int d = e.unit.input_dim();
  const double alpha = e.unit.alpha();
  out.f.assign(n, 0.0);
  out.grad_f.assign(static_cast<std::size_t>(n) * d, 0.0);
  out.kc.assign(n, 0.0);
  out.kz.assign(static_cast<std::size_t>(n) * d, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto zi = e.param(i);
    out.f[i] = target.eval(zi);
    target.grad(zi, {out.grad_f.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)});
    for (int j = 0; j < n; ++j) {
      const auto zj = e.param(j);
      const double w = e.c[j] * std::exp(alpha * dot(zi, zj));
      out.kc[i] += w;
      for (int k = 0; k < d; ++k) out.kz[static_cast<std::size_t>(i) * d + k] += w * zj[k];
    }
  }
}

void network_on_batch(const ParticleEnsemble& e, const Batch& batch, std::span<double> out) {
  for (int p = 0; p < batch.size(); ++p) out[p] = network_eval(e, batch.point(p));
}

void batch_sums(const ParticleEnsemble& e, const Batch& batch, BatchSums& out) {
  if (batch.empty()) throw EmptyBatch("batch_sums: empty batch");
  const int n = e.size();
  const int P = batch.size();
  const int k_dim = e.param_dim();
  out.network.assign(P, 0.0);
  out.residual.assign(P, 0.0);
  out.gc.assign(n, 0.0);
  out.gz.assign(static_cast<std::size_t>(n) * k_dim, 0.0);
  network_on_batch(e, batch, out.network);
  double sq = 0.0;
  for (int p = 0; p < P; ++p) {
    out.residual[p] = batch.values[p] - out.network[p];
    sq += out.residual[p] * out.residual[p];
  }
  out.half_mse = sq / (2.0 * P);

  std::vector<double> g(k_dim);
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < P; ++p) {
      const auto x = batch.point(p);
      const double r = out.residual[p];
      out.gc[i] += r * e.unit.eval(x, e.param(i));
      e.unit.grad_z(x, e.param(i), g);
      for (int k = 0; k < k_dim; ++k) out.gz[static_cast<std::size_t>(i) * k_dim + k] += r * g[k];
    }
    out.gc[i] /= P;
    for (int k = 0; k < k_dim; ++k) out.gz[static_cast<std::size_t>(i) * k_dim + k] /= P;
  }
}

}  // namespace mfnet::kernels::serial
