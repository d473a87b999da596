#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mfnet/ensemble.hpp"
#include "mfnet/errors.hpp"
#include "mfnet/sphere.hpp"
#include "mfnet/spin_tensor.hpp"
#include "mfnet/target.hpp"

using namespace mfnet;

namespace {

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

// textbook triple loop
double naive_eval(int d, const std::vector<double>& a, const std::vector<double>& x) {
  double s = 0;
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int r = 0; r < d; ++r) s += a[(p * d + q) * d + r] * x[p] * x[q] * x[r];
  return s / d;
}

std::vector<double> naive_grad(int d, const std::vector<double>& a, const std::vector<double>& z) {
  auto A = [&](int p, int q, int r) { return a[(p * d + q) * d + r]; };
  std::vector<double> g(d, 0.0);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      for (int r = 0; r < d; ++r) g[p] += (A(p, q, r) + A(r, p, q) + A(q, r, p)) * z[q] * z[r];
  for (auto& v : g) v /= d;
  return g;
}

std::vector<double> fd_grad(const SpinTensor& t, std::vector<double> z, double h = 1e-5) {
  std::vector<double> g(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double keep = z[k];
    z[k] = keep + h;
    const double up = spin3_eval(t, z);
    z[k] = keep - h;
    const double dn = spin3_eval(t, z);
    z[k] = keep;
    g[k] = (up - dn) / (2 * h);
  }
  return g;
}

double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num / den);
}

PlantedTarget two_atoms(double alpha = 0.5) {
  const Unit u = Unit::rbf(alpha, 5);
  RngStream r(5, 5);
  const auto za = sample_sphere(5, r), zb = sample_sphere(5, r);
  std::vector<double> loc(za.coords);
  loc.insert(loc.end(), zb.coords.begin(), zb.coords.end());
  return {u, {1.0, -1.0}, loc};
}

}  // namespace

TEST(Spin3Eval, ZeroTensorIsZero) {
  const SpinTensor t(4, std::vector<double>(64, 0.0));
  RngStream r(1, 1);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(spin3_eval(t, sample_sphere(4, r).coords), 0.0);
}

TEST(Spin3Eval, SingleTerm) {
  const SpinTensor t(1, {2.0});
  EXPECT_EQ(spin3_eval(t, std::vector<double>{1.0}), 2.0);
}

TEST(Spin3Eval, AllOnesD2) {
  const SpinTensor t(2, std::vector<double>(8, 1.0));
  const std::vector<double> x{std::sqrt(2.0), 0.0};
  const double closed = std::pow(x[0] + x[1], 3) / 2;
  EXPECT_NEAR(spin3_eval(t, x), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(spin3_eval(t, x), closed, 1e-15);
  EXPECT_EQ(spin3_eval(t, x), naive_eval(2, std::vector<double>(8, 1.0), x));
}

TEST(Spin3Eval, MatchesNaiveTripleLoop) {
  for (int d : {2, 3, 5, 10, 25}) {
    const SpinTensor t = SpinTensor::random(d, 100 + d);
    RngStream r(d, 2);
    for (int k = 0; k < 20; ++k) {
      const auto x = sample_sphere(d, r).coords;
      const double ref = naive_eval(d, vec(t.coefficients()), x);
      EXPECT_NEAR(spin3_eval(t, x), ref, 1e-12 * (1 + std::abs(ref)));
    }
  }
}

TEST(Spin3Eval, OddUnderReflection) {
  const SpinTensor t = SpinTensor::random(10, 3);
  RngStream r(3, 3);
  for (int k = 0; k < 100; ++k) {
    auto x = sample_sphere(10, r).coords;
    const double fx = spin3_eval(t, x);
    for (auto& v : x) v = -v;
    EXPECT_EQ(spin3_eval(t, x), -fx);
  }
}

TEST(Spin3Eval, DimensionMismatchThrows) {
  const SpinTensor t = SpinTensor::random(3, 1);
  EXPECT_THROW(spin3_eval(t, std::vector<double>{1, 2}), DimensionMismatch);
  EXPECT_THROW(spin3_grad(t, std::vector<double>{1, 2, 3, 4}), DimensionMismatch);
}

TEST(Spin3Grad, ZeroTensorIsZero) {
  const SpinTensor t(3, std::vector<double>(27, 0.0));
  for (double g : spin3_grad(t, std::vector<double>{1, -1, 1})) EXPECT_EQ(g, 0.0);
}

TEST(Spin3Grad, AllOnesD2) {
  const SpinTensor t(2, std::vector<double>(8, 1.0));
  const auto g = spin3_grad(t, std::vector<double>{1, 1});
  EXPECT_EQ(g[0], 6.0);
  EXPECT_EQ(g[1], 6.0);
}

TEST(Spin3Grad, MatchesSymmetrizedBruteForce) {
  const SpinTensor t = SpinTensor::random(6, 9);
  RngStream r(6, 6);
  for (int k = 0; k < 20; ++k) {
    const auto z = sample_sphere(6, r).coords;
    EXPECT_LT(rel_err(spin3_grad(t, z), naive_grad(6, vec(t.coefficients()), z)), 1e-13);
  }
}

TEST(Spin3Grad, FiniteDifferencesD10) {
  const SpinTensor t = SpinTensor::random(10, 12);
  RngStream r(10, 10);
  const auto z = sample_sphere(10, r).coords;
  EXPECT_LT(rel_err(spin3_grad(t, z), fd_grad(t, z)), 1e-6);
}

TEST(Spin3Grad, FiniteDifferencesRandomPairs) {
  RngStream r(31, 0);
  for (int k = 0; k < 100; ++k) {
    const int d = 2 + k % 12;
    const SpinTensor t = SpinTensor::random(d, 1000 + k);
    const auto z = sample_sphere(d, r).coords;
    EXPECT_LT(rel_err(spin3_grad(t, z), fd_grad(t, z)), 1e-6) << "case " << k;
  }
}

TEST(SpinTensor, ReconstructibleFromSeed) {
  const SpinTensor a = SpinTensor::random(7, 99), b = SpinTensor::random(7, 99), c = SpinTensor::random(7, 100);
  EXPECT_EQ(vec(a.coefficients()), vec(b.coefficients()));
  EXPECT_NE(vec(a.coefficients()), vec(c.coefficients()));
  EXPECT_EQ(a.realization_seed(), 99u);
}

TEST(SpinTensor, CoefficientsAreStandardNormal) {
  const SpinTensor t = SpinTensor::random(25, 4);
  double s = 0, s2 = 0;
  for (double a : t.coefficients()) {
    s += a;
    s2 += a * a;
  }
  const double N = t.coefficients().size();
  EXPECT_NEAR(s / N, 0.0, 4 / std::sqrt(N));
  EXPECT_NEAR(s2 / N, 1.0, 4 * std::sqrt(2 / N));
}

TEST(SpinTensor, JsonRoundTrip) {
  const SpinTensor t = SpinTensor::random(4, 1234);
  const SpinTensor u = SpinTensor::from_json(t.to_json());
  EXPECT_EQ(u.dim(), 4);
  EXPECT_EQ(u.realization_seed(), 1234u);
  EXPECT_EQ(vec(u.coefficients()), vec(t.coefficients()));
  const auto x = std::vector<double>{1, -1, 1, 1};
  EXPECT_EQ(spin3_eval(u, x), spin3_eval(t, x));
}

TEST(PlantedEval, EmptyIsZero) {
  const PlantedTarget p{Unit::rbf(1.0, 3), {}, {}};
  EXPECT_EQ(planted_eval(p, std::vector<double>{1, 1, 1}), 0.0);
}

TEST(PlantedEval, SingleAtomIsTheUnit) {
  const Unit u = Unit::sigmoid(3);
  const std::vector<double> z{0.3, -0.2, 0.5, 0.1};
  const PlantedTarget p{u, {1.0}, z};
  const std::vector<double> x{1, -1, 1};
  EXPECT_EQ(planted_eval(p, x), unit_eval(u, x, z));
}

TEST(PlantedEval, OppositeAtomsCancel) {
  const Unit u = Unit::rbf(0.7, 4);
  RngStream r(2, 2);
  const auto z = sample_sphere(4, r).coords;
  std::vector<double> loc(z);
  loc.insert(loc.end(), z.begin(), z.end());
  const PlantedTarget p{u, {2.5, -2.5}, loc};
  for (int k = 0; k < 20; ++k) EXPECT_EQ(planted_eval(p, sample_sphere(4, r).coords), 0.0);
}

TEST(JordanSample, AllZeroWeightsThrow) {
  PlantedTarget p = two_atoms();
  p.weights = {0.0, 0.0};
  EXPECT_THROW(jordan_sample(p, 10, RngStream(1, 1)), DegenerateMeasure);
}

TEST(JordanSample, SinglePositiveAtom) {
  const Unit u = Unit::rbf(1.0, 5);
  RngStream r(4, 1);
  const auto z = sample_sphere(5, r).coords;
  const PlantedTarget p{u, {1.75}, z};
  for (int n : {1, 7, 64}) {
    const ParticleEnsemble e = jordan_sample(p, n, RngStream(n, 0));
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(e.c[i], 1.75);
      const auto zi = e.param(i);
      EXPECT_TRUE(std::equal(zi.begin(), zi.end(), z.begin()));
    }
    for (int k = 0; k < 10; ++k) {
      const auto x = sample_sphere(5, r).coords;
      EXPECT_NEAR(network_eval(e, x), planted_eval(p, x), 1e-12 * std::abs(planted_eval(p, x)));
    }
  }
}

TEST(JordanSample, BinomialFractions) {
  const PlantedTarget p = two_atoms();
  const int n = 10000;
  const ParticleEnsemble e = jordan_sample(p, n, RngStream(77, 0));
  int at_a = 0;
  for (int i = 0; i < n; ++i) {
    EXPECT_EQ(std::abs(e.c[i]), 2.0);  // |gamma|_TV
    if (e.c[i] > 0) {
      ++at_a;
      EXPECT_TRUE(std::equal(e.param(i).begin(), e.param(i).end(), p.location(0).begin()));
    } else {
      EXPECT_TRUE(std::equal(e.param(i).begin(), e.param(i).end(), p.location(1).begin()));
    }
  }
  EXPECT_NEAR(static_cast<double>(at_a) / n, 0.5, 3 * std::sqrt(0.25 / n));
}

TEST(JordanSample, UnequalWeightsFollowTotalVariation) {
  const Unit u = Unit::rbf(0.5, 3);
  const std::vector<double> loc{std::sqrt(3.0), 0, 0, 0, std::sqrt(3.0), 0, 0, 0, std::sqrt(3.0)};
  const PlantedTarget p{u, {3.0, -1.0, 0.0}, loc};
  const int n = 40000;
  const ParticleEnsemble e = jordan_sample(p, n, RngStream(8, 8));
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      if (std::equal(e.param(i).begin(), e.param(i).end(), p.location(k).begin())) ++counts[k];
  EXPECT_EQ(counts[2], 0);
  EXPECT_NEAR(counts[0] / double(n), 0.75, 4 * std::sqrt(0.75 * 0.25 / n));
}

TEST(JordanSample, NetworkIsUnbiased) {
  const PlantedTarget p = two_atoms();
  RngStream r(12, 0);
  const auto x = sample_sphere(5, r).coords;
  const int reps = 1000, n = 100;
  double s = 0, s2 = 0;
  for (int k = 0; k < reps; ++k) {
    const double v = network_eval(jordan_sample(p, n, RngStream(500, k)), x);
    s += v;
    s2 += v * v;
  }
  const double mean = s / reps, var = (s2 - reps * mean * mean) / (reps - 1);
  EXPECT_LT(std::abs(mean - planted_eval(p, x)), 4 * std::sqrt(var / reps));
}

TEST(Target, PlantedGradientMatchesFiniteDifferences) {
  const Target t(two_atoms(0.8));
  RngStream r(3, 9);
  auto x = sample_sphere(5, r).coords;
  std::vector<double> g(5);
  t.grad(x, g);
  for (int k = 0; k < 5; ++k) {
    const double keep = x[k];
    x[k] = keep + 1e-5;
    const double up = t.eval(x);
    x[k] = keep - 1e-5;
    const double dn = t.eval(x);
    x[k] = keep;
    EXPECT_NEAR(g[k], (up - dn) / 2e-5, 1e-6 * (1 + std::abs(g[k])));
  }
}
