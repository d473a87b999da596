#include "mfnet/batch.hpp"

#include <cmath>

#include "mfnet/errors.hpp"
#include "mfnet/sphere.hpp"

namespace mfnet {

Batch draw_points(int d, int P, const RngStream& rng) {
  if (d < 1) throw InvalidDimension("draw_batch: d must be >= 1");
  if (P < 0) throw ValidationError("draw_batch: negative batch size");
  Batch b;
  b.d = d;
  b.points.resize(static_cast<std::size_t>(P) * d);
  b.values.assign(static_cast<std::size_t>(P), 0.0);
  const double radius = std::sqrt(static_cast<double>(d));
#pragma omp parallel for schedule(static)
  for (int p = 0; p < P; ++p) {
    RngStream r = rng.child(static_cast<std::uint64_t>(p));
    sample_sphere_into({b.points.data() + static_cast<std::size_t>(p) * d, static_cast<std::size_t>(d)}, radius, r);
  }
  return b;
}

void evaluate_target(const Target& target, Batch& batch) {
  if (target.dim() != batch.d) throw DimensionMismatch("evaluate_target: target and batch dimensions differ");
  const int P = batch.size();
#pragma omp parallel for schedule(static)
  for (int p = 0; p < P; ++p) batch.values[p] = target.eval(batch.point(p));
}

Batch draw_batch(const Target& target, int P, const RngStream& rng) {
  Batch b = draw_points(target.dim(), P, rng);
  evaluate_target(target, b);
  return b;
}

double khat_eval(const Unit& u, std::span<const double> z, std::span<const double> zp, const Batch& quad) {
  if (quad.empty()) throw EmptyBatch("khat_eval: empty batch");
  double s = 0.0;
  for (int p = 0; p < quad.size(); ++p) {
    const auto x = quad.point(p);
    s += u.eval(x, z) * u.eval(x, zp);
  }
  return s / quad.size();
}

double fhat_eval(const Unit& u, const Batch& quad, std::span<const double> z) {
  if (quad.empty()) throw EmptyBatch("fhat_eval: empty batch");
  double s = 0.0;
  for (int p = 0; p < quad.size(); ++p) s += quad.values[p] * u.eval(quad.point(p), z);
  return s / quad.size();
}

double fhat_eval(const Unit& u, const Target& target, std::span<const double> z, const Batch& quad) {
  if (quad.empty()) throw EmptyBatch("fhat_eval: empty batch");
  double s = 0.0;
  for (int p = 0; p < quad.size(); ++p) {
    const auto x = quad.point(p);
    s += target.eval(x) * u.eval(x, z);
  }
  return s / quad.size();
}

Eigen::MatrixXd khat_gram(const ParticleEnsemble& e, const Batch& quad) {
  if (quad.empty()) throw EmptyBatch("khat_gram: empty batch");
  const int n = e.size();
  const int P = quad.size();
  Eigen::MatrixXd phi(n, P);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < P; ++p) phi(i, p) = e.unit.eval(quad.point(p), e.param(i));
  Eigen::MatrixXd k = (phi * phi.transpose()) / static_cast<double>(P);
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) k(j, i) = k(i, j);
  return k;
}

Eigen::MatrixXd gram_K(const ParticleEnsemble& e, const Batch& quad) {
  Eigen::MatrixXd k = khat_gram(e, quad);
  const int n = e.size();
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      k(i, j) = e.c[i] * e.c[j] * k(i, j);
      k(j, i) = k(i, j);
    }
  return k;
}

}  // namespace mfnet
