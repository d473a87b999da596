#pragma once

#include <span>
#include <vector>

#include "mfnet/rng.hpp"

namespace mfnet {

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// A point on the sphere S^{d-1}(radius). Data points live on radius sqrt(d).
struct SpherePoint {
  std::vector<double> coords;
  double radius = 1.0;

  int dim() const { return static_cast<int>(coords.size()); }
};

/// Uniform point on S^{d-1}(sqrt(d)): normalized Gaussian vector.
SpherePoint sample_sphere(int d, RngStream& rng);

/// Writes a uniform point on S^{out.size()-1}(radius) into `out`.
void sample_sphere_into(std::span<double> out, double radius, RngStream& rng);

/// Rescales v to the given norm. Vectors already on the sphere to within a few
/// ulps are returned untouched, which makes the map idempotent bit-for-bit.
SpherePoint retract_to_sphere(std::span<const double> v, double radius);
void retract_in_place(std::span<double> v, double radius);

/// v - (v.z / |z|^2) z
std::vector<double> tangent_project(std::span<const double> v, std::span<const double> z);
void tangent_project_in_place(std::span<double> v, std::span<const double> z);

}  // namespace mfnet
