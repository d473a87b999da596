#include <cmath>

#include "mfnet/errors.hpp"
#include "mfnet/kernels.hpp"

namespace mfnet::kernels::omp {

namespace {

inline double dot_n(const double* a, const double* b, int d) {
  double s = 0.0;
  for (int k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

void rbf_sums(const ParticleEnsemble& e, const Target& target, RbfSums& out) {
  if (!e.unit.is_rbf()) throw UnitMismatch("rbf_sums: ensemble is not RBF");
  const int n = e.size();
  const int d = e.unit.input_dim();
  const double alpha = e.unit.alpha();
  out.f.resize(n);
  out.grad_f.resize(static_cast<std::size_t>(n) * d);
  out.kc.resize(n);
  out.kz.resize(static_cast<std::size_t>(n) * d);
  const double* z = e.z.data();
  const double* c = e.c.data();

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* zi = z + static_cast<std::size_t>(i) * d;
    out.f[i] = target.eval({zi, static_cast<std::size_t>(d)});
    double* gi = out.grad_f.data() + static_cast<std::size_t>(i) * d;
    target.grad({zi, static_cast<std::size_t>(d)}, {gi, static_cast<std::size_t>(d)});
    double* kzi = out.kz.data() + static_cast<std::size_t>(i) * d;
    for (int k = 0; k < d; ++k) kzi[k] = 0.0;
    double kc = 0.0;
    for (int j = 0; j < n; ++j) {
      const double* zj = z + static_cast<std::size_t>(j) * d;
      const double w = c[j] * std::exp(alpha * dot_n(zi, zj, d));
      kc += w;
      for (int k = 0; k < d; ++k) kzi[k] += w * zj[k];
    }
    out.kc[i] = kc;
  }
}

void network_on_batch(const ParticleEnsemble& e, const Batch& batch, std::span<double> out) {
  const int n = e.size();
  const int P = batch.size();
  const int d = batch.d;
  const int k_dim = e.param_dim();
  const bool rbf = e.unit.is_rbf();
  const double alpha = e.unit.alpha();
  const double* z = e.z.data();
  const double* c = e.c.data();

#pragma omp parallel for schedule(static)
  for (int p = 0; p < P; ++p) {
    const double* x = batch.points.data() + static_cast<std::size_t>(p) * d;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* zi = z + static_cast<std::size_t>(i) * k_dim;
      const double u = dot_n(x, zi, d);
      s += c[i] * (rbf ? std::exp(alpha * u) : logistic(u + zi[d]));
    }
    out[p] = s / n;
  }
}

void batch_sums(const ParticleEnsemble& e, const Batch& batch, BatchSums& out) {
  if (batch.empty()) throw EmptyBatch("batch_sums: empty batch");
  const int n = e.size();
  const int P = batch.size();
  const int d = batch.d;
  const int k_dim = e.param_dim();
  const bool rbf = e.unit.is_rbf();
  const double alpha = e.unit.alpha();
  out.network.resize(P);
  out.residual.resize(P);
  out.gc.resize(n);
  out.gz.resize(static_cast<std::size_t>(n) * k_dim);

  network_on_batch(e, batch, out.network);
  double sq = 0.0;
  for (int p = 0; p < P; ++p) {
    out.residual[p] = batch.values[p] - out.network[p];
    sq += out.residual[p] * out.residual[p];
  }
  out.half_mse = sq / (2.0 * P);

  const double* z = e.z.data();
  const double* r = out.residual.data();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* zi = z + static_cast<std::size_t>(i) * k_dim;
    double* gzi = out.gz.data() + static_cast<std::size_t>(i) * k_dim;
    for (int k = 0; k < k_dim; ++k) gzi[k] = 0.0;
    double gc = 0.0;
    for (int p = 0; p < P; ++p) {
      const double* x = batch.points.data() + static_cast<std::size_t>(p) * d;
      const double u = dot_n(x, zi, d);
      double phi, slope;
      if (rbf) {
        phi = std::exp(alpha * u);
        slope = alpha * phi;
      } else {
        phi = logistic(u + zi[d]);
        slope = phi * (1.0 - phi);
      }
      gc += r[p] * phi;
      const double w = r[p] * slope;
      for (int k = 0; k < d; ++k) gzi[k] += w * x[k];
      if (!rbf) gzi[d] += w;
    }
    out.gc[i] = gc / P;
    for (int k = 0; k < k_dim; ++k) gzi[k] /= P;
  }
}

}  // namespace mfnet::kernels::omp
