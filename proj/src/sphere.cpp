#include "mfnet/sphere.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mfnet/errors.hpp"

namespace mfnet {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: sizes " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void sample_sphere_into(std::span<double> out, double radius, RngStream& rng) {
  if (out.empty()) throw InvalidDimension("sample_sphere: dimension must be >= 1");
  double r2 = 0.0;
  do {
    r2 = 0.0;
    for (double& x : out) {
      x = rng.normal();
      r2 += x * x;
    }
  } while (r2 == 0.0);
  // (x / |x|) * radius keeps S^0 exactly at +-radius
  const double len = std::sqrt(r2);
  for (double& x : out) x = x / len * radius;
}

SpherePoint sample_sphere(int d, RngStream& rng) {
  if (d < 1) throw InvalidDimension("sample_sphere: dimension must be >= 1, got " + std::to_string(d));
  SpherePoint p{std::vector<double>(static_cast<std::size_t>(d)), std::sqrt(static_cast<double>(d))};
  sample_sphere_into(p.coords, p.radius, rng);
  return p;
}

void retract_in_place(std::span<double> v, double radius) {
  const double r = norm(v);
  if (!(r > 0.0) || !std::isfinite(r)) throw DegenerateVector("retract_to_sphere: vector norm is " + std::to_string(r));
  if (std::abs(r - radius) <= 8.0 * std::numeric_limits<double>::epsilon() * radius) return;
  const double scale = radius / r;
  for (double& x : v) x *= scale;
}

SpherePoint retract_to_sphere(std::span<const double> v, double radius) {
  SpherePoint p{std::vector<double>(v.begin(), v.end()), radius};
  retract_in_place(p.coords, radius);
  return p;
}

void tangent_project_in_place(std::span<double> v, std::span<const double> z) {
  const double zz = dot(z, z);
  if (zz == 0.0) return;
  const double coef = dot(v, z) / zz;
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= coef * z[k];
}

std::vector<double> tangent_project(std::span<const double> v, std::span<const double> z) {
  std::vector<double> out(v.begin(), v.end());
  tangent_project_in_place(out, z);
  return out;
}

}  // namespace mfnet
